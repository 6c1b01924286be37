#include "gmix/autodiff.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>

namespace gmix {

namespace {

std::atomic<std::uint32_t> g_tape_counter{1};

std::uint32_t next_tape_id() {
  return g_tape_counter.fetch_add(1, std::memory_order_relaxed);
}

[[noreturn]] void domain_error(Op op, std::size_t index, const std::string& what) {
  throw NumericError(std::string(op_name(op)) + ": " + what, index);
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kConst: return "const";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kPow: return "pow";
    case Op::kLgamma: return "lgamma";
    case Op::kLogSumExp: return "logsumexp";
  }
  return "?";
}

Tape::Tape() : id_(next_tape_id()) {}

void Tape::clear() {
  nodes_.clear();
  id_ = next_tape_id();
}

VarRef Tape::var(double value) {
  if (!std::isfinite(value)) {
    throw InvalidInput("tape_var: value must be finite");
  }
  nodes_.push_back(Node{Op::kInput, 0, 0, value, 0.0, 0.0});
  return VarRef{id_, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

VarRef Tape::constant(double value) {
  if (!std::isfinite(value)) {
    throw InvalidInput("constant: value must be finite");
  }
  nodes_.push_back(Node{Op::kConst, 0, 0, value, 0.0, 0.0});
  return VarRef{id_, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

double Tape::value(VarRef ref) const {
  check_ref(ref);
  return nodes_[ref.index].val;
}

void Tape::check_ref(VarRef ref) const {
  if (ref.tape_id != id_ || ref.index >= nodes_.size()) {
    throw TapeMismatch("VarRef does not belong to this tape");
  }
}

VarRef apply(Tape& tape, Op op, VarRef a, VarRef b) {
  tape.check_ref(a);
  const bool binary = (op == Op::kAdd || op == Op::kSub || op == Op::kMul ||
                       op == Op::kDiv || op == Op::kPow || op == Op::kLogSumExp);
  if (binary) {
    tape.check_ref(b);
  }

  const std::size_t idx = tape.nodes_.size();
  const double x = tape.nodes_[a.index].val;
  const double y = binary ? tape.nodes_[b.index].val : 0.0;

  Node n;
  n.op = op;
  n.a = a.index;
  n.b = binary ? b.index : 0;

  switch (op) {
    case Op::kAdd:
      n.val = x + y;
      n.pa = 1.0;
      n.pb = 1.0;
      break;
    case Op::kSub:
      n.val = x - y;
      n.pa = 1.0;
      n.pb = -1.0;
      break;
    case Op::kMul:
      n.val = x * y;
      n.pa = y;
      n.pb = x;
      break;
    case Op::kDiv:
      if (y == 0.0) domain_error(op, idx, "division by zero");
      n.val = x / y;
      n.pa = 1.0 / y;
      n.pb = -n.val / y;
      break;
    case Op::kNeg:
      n.val = -x;
      n.pa = -1.0;
      break;
    case Op::kSin:
      n.val = std::sin(x);
      n.pa = std::cos(x);
      break;
    case Op::kCos:
      n.val = std::cos(x);
      n.pa = -std::sin(x);
      break;
    case Op::kExp:
      n.val = std::exp(x);
      n.pa = n.val;
      break;
    case Op::kLog:
      if (x <= 0.0) domain_error(op, idx, "argument must be positive");
      n.val = std::log(x);
      n.pa = 1.0 / x;
      break;
    case Op::kSqrt:
      if (x < 0.0) domain_error(op, idx, "argument must be non-negative");
      n.val = std::sqrt(x);
      n.pa = x > 0.0 ? 0.5 / n.val : std::numeric_limits<double>::infinity();
      break;
    case Op::kPow:
      if (x <= 0.0) domain_error(op, idx, "base must be positive");
      n.val = std::pow(x, y);
      n.pa = y * std::pow(x, y - 1.0);
      n.pb = n.val * std::log(x);
      break;
    case Op::kLgamma:
      if (x <= 0.0 && x == std::floor(x)) {
        domain_error(op, idx, "pole at non-positive integer");
      }
      n.val = std::lgamma(x);
      n.pa = digamma(x);
      break;
    case Op::kLogSumExp: {
      const double m = x > y ? x : y;
      n.val = m + std::log(std::exp(x - m) + std::exp(y - m));
      n.pa = std::exp(x - n.val);
      n.pb = std::exp(y - n.val);
      break;
    }
    case Op::kInput:
    case Op::kConst:
      throw InvalidInput("apply: leaf opcodes are created via var/constant");
  }

  if (!std::isfinite(n.val)) {
    domain_error(op, idx, "non-finite result");
  }

  tape.nodes_.push_back(n);
  return VarRef{tape.id_, static_cast<std::uint32_t>(idx)};
}

VarRef apply(Tape& tape, Op op, VarRef a) {
  return apply(tape, op, a, VarRef{tape.id(), 0});
}

GradResult backward(const Tape& tape, VarRef output,
                    std::span<const VarRef> inputs) {
  tape.check_ref(output);
  for (const VarRef& in : inputs) {
    tape.check_ref(in);
  }

  std::vector<double> adjoint(output.index + 1, 0.0);
  adjoint[output.index] = 1.0;

  for (std::size_t i = output.index + 1; i-- > 0;) {
    const double adj = adjoint[i];
    if (adj == 0.0) continue;
    const Node& n = tape.nodes_[i];
    switch (n.op) {
      case Op::kInput:
      case Op::kConst:
        break;
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul:
      case Op::kDiv:
      case Op::kPow:
      case Op::kLogSumExp:
        adjoint[n.a] += n.pa * adj;
        adjoint[n.b] += n.pb * adj;
        break;
      default:
        adjoint[n.a] += n.pa * adj;
        break;
    }
  }

  GradResult out;
  out.value = tape.nodes_[output.index].val;
  out.grads.reserve(inputs.size());
  for (const VarRef& in : inputs) {
    out.grads.push_back(in.index < adjoint.size() ? adjoint[in.index] : 0.0);
  }
  return out;
}

double forward_grad(const std::function<Dual(std::span<const Dual>)>& f,
                    std::span<const double> x,
                    std::span<const double> direction) {
  if (x.size() != direction.size()) {
    throw InvalidInput("forward_grad: |direction| must equal |x|");
  }
  std::vector<Dual> duals(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    duals[i] = Dual(x[i], direction[i]);
  }
  return f(duals).d;
}

std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h) {
  if (h <= 0.0) {
    throw InvalidInput("finite_diff_grad: h must be positive");
  }
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double hi = h * (1.0 + std::abs(x[i]));
    const double xi = point[i];
    point[i] = xi + hi;
    const double fp = f(point);
    point[i] = xi - hi;
    const double fm = f(point);
    point[i] = xi;
    grad[i] = (fp - fm) / (2.0 * hi);
  }
  return grad;
}

namespace {

// Shared builder so the value/derivative entry point and the node-count
// probe agree exactly on tape layout.
ScalarGrad logistic_map_impl(double x, int n, std::size_t* node_count) {
  if (n < 1) {
    throw InvalidInput("logistic_map_grad: n must be >= 1");
  }
  Tape tape;
  Ad l = make_var(tape, x);
  VarRef input = l.ref;
  Ad one = make_const(tape, 1.0);
  Ad four = make_const(tape, 4.0);
  for (int i = 1; i < n; ++i) {
    l = four * (l * (one - l));
  }
  if (node_count != nullptr) {
    *node_count = tape.size();
  }
  const VarRef in[] = {input};
  GradResult g = backward(tape, l.ref, in);
  return {g.value, g.grads[0]};
}

ScalarGrad nested_sigmoid_impl(double x, int n, std::size_t* node_count) {
  if (n < 0) {
    throw InvalidInput("nested_sigmoid_grad: n must be >= 0");
  }
  Tape tape;
  Ad t = make_var(tape, x);
  VarRef input = t.ref;
  Ad one = make_const(tape, 1.0);
  Ad l = one / (one + exp(t));
  for (int i = 0; i < n; ++i) {
    l = one / (one + exp(l));
  }
  if (node_count != nullptr) {
    *node_count = tape.size();
  }
  const VarRef in[] = {input};
  GradResult g = backward(tape, l.ref, in);
  return {g.value, g.grads[0]};
}

}  // namespace

ScalarGrad logistic_map_grad(double x, int n) {
  return logistic_map_impl(x, n, nullptr);
}

std::size_t logistic_map_node_count(int n) {
  std::size_t count = 0;
  logistic_map_impl(0.25, n, &count);
  return count;
}

ScalarGrad nested_sigmoid_grad(double x, int n) {
  return nested_sigmoid_impl(x, n, nullptr);
}

std::size_t nested_sigmoid_node_count(int n) {
  std::size_t count = 0;
  nested_sigmoid_impl(0.5, n, &count);
  return count;
}

double digamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) {
    throw NumericError("digamma: pole at non-positive integer");
  }
  double result = 0.0;
  if (x < 0.5) {
    // reflection: psi(x) = psi(1-x) - pi/tan(pi x)
    result = -M_PI / std::tan(M_PI * x);
    x = 1.0 - x;
  }
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // asymptotic series: ln x - 1/(2x) - sum B_{2k}/(2k x^{2k})
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 -
                                    inv2 * (1.0 / 240.0 -
                                            inv2 * (1.0 / 132.0 -
                                                    inv2 * (691.0 / 32760.0))))));
  return result;
}

}  // namespace gmix
