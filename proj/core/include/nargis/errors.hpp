#pragma once

#include <stdexcept>
#include <string>

namespace nargis {

// Base class for every error thrown by this library. Each subclass names one
// failure condition so callers can catch precisely what they can handle.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// graph-core
struct MalformedFile : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };
struct DegenerateGraph : Error { using Error::Error; };
struct NotEnoughNegatives : Error { using Error::Error; };
struct BadNodeId : Error { using Error::Error; };

// tensor / autodiff
struct ShapeMismatch : Error { using Error::Error; };
struct NotScalar : Error { using Error::Error; };
struct DetachedTensor : Error { using Error::Error; };

// spectral clustering
struct ConvergenceFailure : Error { using Error::Error; };
struct EmptyCluster : Error { using Error::Error; };

// losses and datasets
struct EmptyMask : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct NotADistribution : Error { using Error::Error; };
struct NoPositiveEdges : Error { using Error::Error; };
struct UnlabeledEndpoint : Error { using Error::Error; };
struct OneClassOnly : Error { using Error::Error; };

// attacks
struct KnowledgeMismatch : Error { using Error::Error; };
struct BadDelta : Error { using Error::Error; };

// differential privacy baselines
struct BadEpsilon : Error { using Error::Error; };

// configuration
struct BadParams : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace nargis
