#pragma once

// Random programs over the differentiable op catalogue, used to stress the
// backward pass against finite differences. A program is a replayable plan,
// so the same case can be evaluated at perturbed points.

#include <cstdint>
#include <vector>

#include "nargis/rng.hpp"
#include "nargis/tensor.hpp"

namespace nargis::testsupport {

struct CompositionCase {
  ScalarFn fn;
  Tensor point;
};

namespace detail {

enum class OpCode {
  kMatmulConst,
  kAddConst,
  kAddPair,
  kMulConst,
  kMulPair,
  kScale,
  kRelu,
  kSigmoid,
  kExp,      // applied to sigmoid output only, keeping magnitudes bounded
  kLog,      // applied to strictly positive entries only
  kSoftmax,
  kRowMean,
  kRowSlice,
  kGatherRows,
  kConcatPair,
  kDropoutOff,  // training = false, exercises the identity path
};

struct Instr {
  OpCode op;
  int a = 0;  // stack index of the first operand
  int b = 0;  // stack index of the second operand, when used
  double s = 1.0;
  int first = 0, count = 0;
  std::vector<int> index;
  Tensor constant;
};

struct Shape {
  int rows = 0, cols = 0;
  bool positive = false;  // entries known to lie in (0, 1]
};

}  // namespace detail

// `count` random compositions, 3 to 8 ops each, over shapes up to 6x6.
// Deterministic for a given seed.
inline std::vector<CompositionCase> random_compositions(int count,
                                                        std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> val(-1.5, 1.5);
  std::uniform_int_distribution<int> dim(1, 6);

  std::vector<CompositionCase> cases;
  cases.reserve(static_cast<std::size_t>(count));
  for (int case_id = 0; case_id < count; ++case_id) {
    const int r = dim(rng), c = dim(rng);
    std::vector<double> x0(static_cast<std::size_t>(r) * c);
    for (double& v : x0) v = val(rng);

    std::vector<Shape> shapes{{r, c, false}};
    std::vector<Instr> plan;
    std::uniform_int_distribution<int> op_count(3, 8);
    const int ops_wanted = op_count(rng);

    std::uniform_int_distribution<int> op_pick(0, 15);
    while (static_cast<int>(plan.size()) < ops_wanted) {
      Instr ins;
      ins.op = static_cast<OpCode>(op_pick(rng));
      std::uniform_int_distribution<int> operand(0, static_cast<int>(shapes.size()) - 1);
      ins.a = operand(rng);
      const Shape& sa = shapes[static_cast<std::size_t>(ins.a)];
      Shape out = sa;
      switch (ins.op) {
        case OpCode::kMatmulConst: {
          const int c2 = dim(rng);
          std::vector<double> w(static_cast<std::size_t>(sa.cols) * c2);
          for (double& v : w) v = val(rng);
          ins.constant = Tensor::from_rows(sa.cols, c2, std::move(w));
          out = {sa.rows, c2, false};
          break;
        }
        case OpCode::kAddConst:
        case OpCode::kMulConst: {
          std::vector<double> w(static_cast<std::size_t>(sa.rows) * sa.cols);
          for (double& v : w) v = val(rng);
          ins.constant = Tensor::from_rows(sa.rows, sa.cols, std::move(w));
          out.positive = false;
          break;
        }
        case OpCode::kAddPair:
        case OpCode::kMulPair: {
          ins.b = -1;
          for (int i = 0; i < static_cast<int>(shapes.size()); ++i)
            if (shapes[static_cast<std::size_t>(i)].rows == sa.rows &&
                shapes[static_cast<std::size_t>(i)].cols == sa.cols)
              ins.b = i;
          if (ins.b < 0) continue;
          out.positive = false;
          break;
        }
        case OpCode::kScale: {
          std::uniform_real_distribution<double> sc(-2.0, 2.0);
          ins.s = sc(rng);
          out.positive = false;
          break;
        }
        case OpCode::kRelu:
          out.positive = false;
          break;
        case OpCode::kSigmoid:
          out.positive = true;
          break;
        case OpCode::kExp:
        case OpCode::kLog:
          if (!sa.positive) continue;
          out.positive = ins.op == OpCode::kExp;
          if (ins.op == OpCode::kLog) out.positive = false;
          break;
        case OpCode::kSoftmax:
          out.positive = true;
          break;
        case OpCode::kRowMean:
          out = {sa.rows, 1, sa.positive};
          break;
        case OpCode::kRowSlice: {
          if (sa.rows < 2) continue;
          std::uniform_int_distribution<int> f(0, sa.rows - 2);
          ins.first = f(rng);
          std::uniform_int_distribution<int> n(1, sa.rows - ins.first);
          ins.count = n(rng);
          out = {ins.count, sa.cols, sa.positive};
          break;
        }
        case OpCode::kGatherRows: {
          std::uniform_int_distribution<int> n(1, 6);
          const int picks = n(rng);
          std::uniform_int_distribution<int> row(0, sa.rows - 1);
          for (int i = 0; i < picks; ++i) ins.index.push_back(row(rng));
          out = {picks, sa.cols, sa.positive};
          break;
        }
        case OpCode::kConcatPair: {
          ins.b = -1;
          for (int i = 0; i < static_cast<int>(shapes.size()); ++i)
            if (shapes[static_cast<std::size_t>(i)].cols == sa.cols) ins.b = i;
          if (ins.b < 0) continue;
          out = {sa.rows + shapes[static_cast<std::size_t>(ins.b)].rows, sa.cols,
                 sa.positive && shapes[static_cast<std::size_t>(ins.b)].positive};
          break;
        }
        case OpCode::kDropoutOff:
          break;
      }
      shapes.push_back(out);
      plan.push_back(std::move(ins));
    }

    CompositionCase cc;
    cc.point = Tensor::from_rows(r, c, std::move(x0));
    cc.fn = [plan](Tape& tape, const Tensor& x) -> Tensor {
      std::vector<Tensor> stack{x};
      Rng unused = make_rng(0);
      for (const Instr& ins : plan) {
        const Tensor& a = stack[static_cast<std::size_t>(ins.a)];
        switch (ins.op) {
          case OpCode::kMatmulConst:
            stack.push_back(ops::matmul(tape, a, ins.constant));
            break;
          case OpCode::kAddConst:
            stack.push_back(ops::add(tape, a, ins.constant));
            break;
          case OpCode::kAddPair:
            stack.push_back(ops::add(tape, a, stack[static_cast<std::size_t>(ins.b)]));
            break;
          case OpCode::kMulConst:
            stack.push_back(ops::mul(tape, a, ins.constant));
            break;
          case OpCode::kMulPair:
            stack.push_back(ops::mul(tape, a, stack[static_cast<std::size_t>(ins.b)]));
            break;
          case OpCode::kScale:
            stack.push_back(ops::scale(tape, a, ins.s));
            break;
          case OpCode::kRelu:
            stack.push_back(ops::relu(tape, a));
            break;
          case OpCode::kSigmoid:
            stack.push_back(ops::sigmoid(tape, a));
            break;
          case OpCode::kExp:
            stack.push_back(ops::exp(tape, a));
            break;
          case OpCode::kLog:
            stack.push_back(ops::log(tape, a));
            break;
          case OpCode::kSoftmax:
            stack.push_back(ops::row_softmax(tape, a));
            break;
          case OpCode::kRowMean:
            stack.push_back(ops::row_mean(tape, a));
            break;
          case OpCode::kRowSlice:
            stack.push_back(ops::row_slice(tape, a, ins.first, ins.count));
            break;
          case OpCode::kGatherRows:
            stack.push_back(ops::gather_rows(tape, a, ins.index));
            break;
          case OpCode::kConcatPair:
            stack.push_back(ops::concat_rows(tape, a, stack[static_cast<std::size_t>(ins.b)]));
            break;
          case OpCode::kDropoutOff:
            stack.push_back(ops::dropout(tape, a, 0.5, unused, false));
            break;
        }
      }
      Tensor acc = ops::mean(tape, stack.back());
      return ops::add(tape, acc, ops::scale(tape, ops::sum(tape, stack.front()), 0.01));
    };
    cases.push_back(std::move(cc));
  }
  return cases;
}

}  // namespace nargis::testsupport
