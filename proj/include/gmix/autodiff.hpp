#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gmix/errors.hpp"

namespace gmix {

// Elementary operations recorded on a tape. Leaf nodes are inputs (registered
// for gradients) or constants.
enum class Op : std::uint8_t {
  kInput,
  kConst,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kSin,
  kCos,
  kExp,
  kLog,
  kSqrt,
  kPow,
  kLgamma,
  kLogSumExp,  // fused log(e^a + e^b), max-shifted
};

const char* op_name(Op op);

// Handle into a tape. Carries the owning tape's identity so use with a
// foreign tape is detectable.
struct VarRef {
  std::uint32_t tape_id = 0;
  std::uint32_t index = 0;

  friend bool operator==(const VarRef&, const VarRef&) = default;
};

struct Node {
  Op op;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double val = 0.0;
  double pa = 0.0;  // d val / d nodes[a]
  double pb = 0.0;  // d val / d nodes[b]
};

struct GradResult {
  double value = 0.0;
  std::vector<double> grads;
};

// Append-only evaluation trace. Values are computed eagerly as nodes are
// recorded, so the forward pass is complete once construction ends. A tape is
// single-threaded; distinct tapes may be used concurrently.
class Tape {
 public:
  Tape();

  VarRef var(double value);       // input node; value must be finite
  VarRef constant(double value);  // constant leaf

  double value(VarRef ref) const;
  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  std::uint32_t id() const { return id_; }

  // Discards all nodes but keeps capacity. The tape assumes a fresh identity
  // so stale VarRefs from before the clear are rejected.
  void clear();

  void check_ref(VarRef ref) const;

 private:
  friend VarRef apply(Tape& tape, Op op, VarRef a, VarRef b);
  friend VarRef apply(Tape& tape, Op op, VarRef a);
  friend GradResult backward(const Tape& tape, VarRef output,
                             std::span<const VarRef> inputs);

  std::vector<Node> nodes_;
  std::uint32_t id_;
};

// Records one elementary operation, evaluating its value and local partial
// derivatives. Throws NumericError on domain violations (log of a
// non-positive value, division by zero, ...) or a non-finite result; the
// error carries the index the node would have occupied.
VarRef apply(Tape& tape, Op op, VarRef a, VarRef b);
VarRef apply(Tape& tape, Op op, VarRef a);
inline VarRef tape_var(Tape& tape, double value) { return tape.var(value); }

// Single reverse sweep from `output`; returns the output value and the
// adjoint of each requested input. The tape is not modified, so repeated
// sweeps give identical results.
GradResult backward(const Tape& tape, VarRef output,
                    std::span<const VarRef> inputs);

// ---------------------------------------------------------------------------
// Forward mode

// Value plus directional-derivative coefficient; arithmetic follows the
// chain rule per elementary op.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value, double deriv = 0.0) : v(value), d(deriv) {}
};

// Directional derivative of f at x along `direction` via dual arithmetic.
double forward_grad(const std::function<Dual(std::span<const Dual>)>& f,
                    std::span<const double> x,
                    std::span<const double> direction);

// Central differences (f(x+h_i e_i) - f(x-h_i e_i)) / (2 h_i) with the step
// scaled per coordinate as h * (1 + |x_i|). Test oracle, not a fitting path.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h = 1e-5);

struct ScalarGrad {
  double value = 0.0;
  double deriv = 0.0;
};

// l_{n+1} = 4 l_n (1 - l_n), l_1 = x; returns l_n and d l_n / dx computed on
// a tape whose node count is affine in n.
ScalarGrad logistic_map_grad(double x, int n);
std::size_t logistic_map_node_count(int n);

// l_0 = 1/(1+e^x), l_{k} = 1/(1+e^{l_{k-1}}); returns l_n and d l_n / dx.
ScalarGrad nested_sigmoid_grad(double x, int n);
std::size_t nested_sigmoid_node_count(int n);

// Derivative of lgamma. Recurrence plus asymptotic series for x >= 0.5,
// reflection below; absolute error under 1e-10 away from the poles.
double digamma(double x);

// ---------------------------------------------------------------------------
// Expression sugar over tape handles.
//
// Model code is written once, templated on the scalar type: `double` for
// plain evaluation, `Ad` to record on a tape, `Dual` for forward mode.

struct Ad {
  Tape* tape = nullptr;
  VarRef ref{};

  Ad() = default;
  Ad(Tape& t, VarRef r) : tape(&t), ref(r) {}

  double value() const { return tape->value(ref); }
};

inline Ad make_const(Tape& t, double c) { return Ad(t, t.constant(c)); }
inline Ad make_var(Tape& t, double v) { return Ad(t, t.var(v)); }

namespace detail {
inline Ad bin(Op op, const Ad& a, const Ad& b) {
  return Ad(*a.tape, apply(*a.tape, op, a.ref, b.ref));
}
inline Ad un(Op op, const Ad& a) {
  return Ad(*a.tape, apply(*a.tape, op, a.ref));
}
}  // namespace detail

inline Ad operator+(const Ad& a, const Ad& b) { return detail::bin(Op::kAdd, a, b); }
inline Ad operator-(const Ad& a, const Ad& b) { return detail::bin(Op::kSub, a, b); }
inline Ad operator*(const Ad& a, const Ad& b) { return detail::bin(Op::kMul, a, b); }
inline Ad operator/(const Ad& a, const Ad& b) { return detail::bin(Op::kDiv, a, b); }
inline Ad operator-(const Ad& a) { return detail::un(Op::kNeg, a); }

inline Ad operator+(const Ad& a, double c) { return a + make_const(*a.tape, c); }
inline Ad operator+(double c, const Ad& a) { return make_const(*a.tape, c) + a; }
inline Ad operator-(const Ad& a, double c) { return a - make_const(*a.tape, c); }
inline Ad operator-(double c, const Ad& a) { return make_const(*a.tape, c) - a; }
inline Ad operator*(const Ad& a, double c) { return a * make_const(*a.tape, c); }
inline Ad operator*(double c, const Ad& a) { return make_const(*a.tape, c) * a; }
inline Ad operator/(const Ad& a, double c) { return a / make_const(*a.tape, c); }
inline Ad operator/(double c, const Ad& a) { return make_const(*a.tape, c) / a; }

inline Ad& operator+=(Ad& a, const Ad& b) { a = a + b; return a; }
inline Ad& operator-=(Ad& a, const Ad& b) { a = a - b; return a; }
inline Ad& operator*=(Ad& a, const Ad& b) { a = a * b; return a; }

inline Ad sin(const Ad& a) { return detail::un(Op::kSin, a); }
inline Ad cos(const Ad& a) { return detail::un(Op::kCos, a); }
inline Ad exp(const Ad& a) { return detail::un(Op::kExp, a); }
inline Ad log(const Ad& a) { return detail::un(Op::kLog, a); }
inline Ad sqrt(const Ad& a) { return detail::un(Op::kSqrt, a); }
inline Ad lgamma(const Ad& a) { return detail::un(Op::kLgamma, a); }
inline Ad pow(const Ad& a, const Ad& b) { return detail::bin(Op::kPow, a, b); }
inline Ad pow(const Ad& a, double c) { return pow(a, make_const(*a.tape, c)); }
inline Ad logsumexp_pair(const Ad& a, const Ad& b) {
  return detail::bin(Op::kLogSumExp, a, b);
}

// Dual arithmetic.
inline Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(const Dual& a, const Dual& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
inline Dual operator/(const Dual& a, const Dual& b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator+(const Dual& a, double c) { return {a.v + c, a.d}; }
inline Dual operator+(double c, const Dual& a) { return {c + a.v, a.d}; }
inline Dual operator-(const Dual& a, double c) { return {a.v - c, a.d}; }
inline Dual operator-(double c, const Dual& a) { return {c - a.v, -a.d}; }
inline Dual operator*(const Dual& a, double c) { return {a.v * c, a.d * c}; }
inline Dual operator*(double c, const Dual& a) { return {c * a.v, c * a.d}; }
inline Dual operator/(const Dual& a, double c) { return {a.v / c, a.d / c}; }
inline Dual operator/(double c, const Dual& a) {
  return {c / a.v, -c * a.d / (a.v * a.v)};
}
inline Dual& operator+=(Dual& a, const Dual& b) { a = a + b; return a; }
inline Dual& operator-=(Dual& a, const Dual& b) { a = a - b; return a; }
inline Dual& operator*=(Dual& a, const Dual& b) { a = a * b; return a; }

inline Dual sin(const Dual& a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(const Dual& a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual exp(const Dual& a) {
  double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }
inline Dual sqrt(const Dual& a) {
  double s = std::sqrt(a.v);
  return {s, 0.5 / s * a.d};
}
inline Dual lgamma(const Dual& a) {
  return {std::lgamma(a.v), digamma(a.v) * a.d};
}
inline Dual pow(const Dual& a, const Dual& b) {
  double v = std::pow(a.v, b.v);
  return {v, v * (b.d * std::log(a.v) + b.v * a.d / a.v)};
}
inline Dual pow(const Dual& a, double c) {
  return {std::pow(a.v, c), c * std::pow(a.v, c - 1.0) * a.d};
}
inline Dual logsumexp_pair(const Dual& a, const Dual& b) {
  double m = a.v > b.v ? a.v : b.v;
  double v = m + std::log(std::exp(a.v - m) + std::exp(b.v - m));
  double wa = std::exp(a.v - v);
  return {v, wa * a.d + (1.0 - wa) * b.d};
}

// double overloads so unqualified calls in templated code resolve uniformly.
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double lgamma(double x) { return std::lgamma(x); }
inline double pow(double x, double y) { return std::pow(x, y); }
inline double logsumexp_pair(double a, double b) {
  double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Runtime value of a scalar of any flavor; drives data-dependent branches
// (pivot choice, sign tests) in generic code.
inline double val(double x) { return x; }
inline double val(const Ad& x) { return x.value(); }
inline double val(const Dual& x) { return x.v; }

// Constant of the same flavor as a prototype scalar; for tape scalars the
// constant lands on the prototype's tape.
inline double make_like(double, double c) { return c; }
inline Dual make_like(const Dual&, double c) { return Dual(c); }
inline Ad make_like(const Ad& proto, double c) {
  return make_const(*proto.tape, c);
}

// |x| as a sign branch on the stored value, so no extra opcode is needed;
// the recorded graph stays differentiable on either side of zero.
template <class T>
T absval(const T& x) {
  return val(x) >= 0.0 ? x : -x;
}

}  // namespace gmix
