#include "gmix/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gmix/autodiff.hpp"
#include "gmix/rng.hpp"

namespace gmix {

namespace {

// One elementary step of a generated expression program. Leaves are inputs
// (a = input slot) or embedded constants (c); everything else applies `op`
// to earlier instructions.
struct Instr {
  enum Kind { kInput, kConstant, kApply } kind = kApply;
  Op op = Op::kAdd;
  int a = 0;
  int b = 0;
  double c = 0.0;
};

template <class T>
T eval_program(const std::vector<Instr>& prog, std::span<const T> inputs,
               Tape* tape) {
  std::vector<T> vals;
  vals.reserve(prog.size());
  for (const Instr& ins : prog) {
    switch (ins.kind) {
      case Instr::kInput:
        vals.push_back(inputs[static_cast<std::size_t>(ins.a)]);
        break;
      case Instr::kConstant:
        if constexpr (std::is_same_v<T, Ad>) {
          vals.push_back(make_const(*tape, ins.c));
        } else {
          vals.push_back(T(ins.c));
        }
        break;
      case Instr::kApply: {
        const T& x = vals[static_cast<std::size_t>(ins.a)];
        const T& y = vals[static_cast<std::size_t>(ins.b)];
        switch (ins.op) {
          case Op::kAdd: vals.push_back(x + y); break;
          case Op::kSub: vals.push_back(x - y); break;
          case Op::kMul: vals.push_back(x * y); break;
          case Op::kDiv: vals.push_back(x / y); break;
          case Op::kNeg: vals.push_back(-x); break;
          case Op::kSin: vals.push_back(sin(x)); break;
          case Op::kCos: vals.push_back(cos(x)); break;
          case Op::kExp: vals.push_back(exp(x)); break;
          case Op::kLog: vals.push_back(log(x)); break;
          case Op::kSqrt: vals.push_back(sqrt(x)); break;
          case Op::kPow: vals.push_back(pow(x, y)); break;
          case Op::kLgamma: vals.push_back(lgamma(x)); break;
          case Op::kLogSumExp: vals.push_back(logsumexp_pair(x, y)); break;
          default: break;
        }
        break;
      }
    }
  }
  return vals.back();
}

// Builds a random program whose intermediate values stay bounded and inside
// every op's domain, by construction of the gadgets plus a magnitude cap
// checked on concrete values during generation.
struct ProgramBuilder {
  std::vector<Instr> prog;
  std::vector<double> vals;
  std::vector<int> depth;
  Rng& rng;

  explicit ProgramBuilder(Rng& r) : rng(r) {}

  int push(Instr ins, double v, int d) {
    prog.push_back(ins);
    vals.push_back(v);
    depth.push_back(d);
    return static_cast<int>(prog.size()) - 1;
  }

  int input(int slot, double v) {
    Instr ins;
    ins.kind = Instr::kInput;
    ins.a = slot;
    return push(ins, v, 0);
  }

  int constant(double c) {
    Instr ins;
    ins.kind = Instr::kConstant;
    ins.c = c;
    return push(ins, c, 0);
  }

  int op2(Op o, int a, int b) {
    Instr ins;
    ins.op = o;
    ins.a = a;
    ins.b = b;
    double v = 0.0;
    const double x = vals[static_cast<std::size_t>(a)];
    const double y = vals[static_cast<std::size_t>(b)];
    switch (o) {
      case Op::kAdd: v = x + y; break;
      case Op::kSub: v = x - y; break;
      case Op::kMul: v = x * y; break;
      case Op::kDiv: v = x / y; break;
      case Op::kNeg: v = -x; break;
      case Op::kSin: v = std::sin(x); break;
      case Op::kCos: v = std::cos(x); break;
      case Op::kExp: v = std::exp(x); break;
      case Op::kLog: v = std::log(x); break;
      case Op::kSqrt: v = std::sqrt(x); break;
      case Op::kPow: v = std::pow(x, y); break;
      case Op::kLgamma: v = std::lgamma(x); break;
      case Op::kLogSumExp: {
        const double m = x > y ? x : y;
        v = m + std::log(std::exp(x - m) + std::exp(y - m));
        break;
      }
      default: break;
    }
    return push(ins, v, 1 + std::max(depth[static_cast<std::size_t>(a)],
                                     depth[static_cast<std::size_t>(b)]));
  }

  int op1(Op o, int a) { return op2(o, a, a); }

  int pick() {
    return static_cast<int>(rng.below(prog.size()));
  }

  double value(int i) const { return vals[static_cast<std::size_t>(i)]; }

  // Appends one randomly chosen domain-safe gadget; returns its root, or -1
  // if the candidate left the magnitude cap.
  int gadget() {
    const std::size_t before = prog.size();
    const int choice = static_cast<int>(rng.below(12));
    const int a = pick();
    const int b = pick();
    int r = -1;
    switch (choice) {
      case 0: r = op2(Op::kAdd, a, b); break;
      case 1: r = op2(Op::kSub, a, b); break;
      case 2: r = op2(Op::kMul, a, b); break;
      case 3:  // a / (b^2 + 1)
        r = op2(Op::kDiv, a, op2(Op::kAdd, op2(Op::kMul, b, b), constant(1.0)));
        break;
      case 4: r = op1(Op::kNeg, a); break;
      case 5: r = op1(rng.below(2) == 0 ? Op::kSin : Op::kCos, a); break;
      case 6:  // exp(a / 4)
        r = op1(Op::kExp, op2(Op::kDiv, a, constant(4.0)));
        break;
      case 7:  // log(a^2 + 1/2)
        r = op1(Op::kLog, op2(Op::kAdd, op2(Op::kMul, a, a), constant(0.5)));
        break;
      case 8:  // sqrt(a^2 + 1)
        r = op1(Op::kSqrt, op2(Op::kAdd, op2(Op::kMul, a, a), constant(1.0)));
        break;
      case 9:  // (a^2 + 1/2) ^ sin(b)
        r = op2(Op::kPow,
                op2(Op::kAdd, op2(Op::kMul, a, a), constant(0.5)),
                op1(Op::kSin, b));
        break;
      case 10:  // lgamma(a^2 + 3/2)
        r = op1(Op::kLgamma, op2(Op::kAdd, op2(Op::kMul, a, a), constant(1.5)));
        break;
      case 11: r = op2(Op::kLogSumExp, a, b); break;
      default: break;
    }
    if (!std::isfinite(value(r)) || std::abs(value(r)) > 40.0 ||
        depth[static_cast<std::size_t>(r)] > 8) {
      prog.resize(before);
      vals.resize(before);
      depth.resize(before);
      return -1;
    }
    return r;
  }
};

}  // namespace

GradCheckReport run_gradcheck(int cases, std::uint64_t seed) {
  GradCheckReport report;
  report.cases = cases;
  for (int c = 0; c < cases; ++c) {
    Rng rng(stream_hash("gradcheck", {seed, static_cast<std::uint64_t>(c)}));
    const std::size_t n_inputs = 2 + rng.below(4);
    std::vector<double> x(n_inputs);
    ProgramBuilder pb(rng);
    for (std::size_t i = 0; i < n_inputs; ++i) {
      x[i] = rng.uniform(-2.0, 2.0);
      pb.input(static_cast<int>(i), x[i]);
    }
    int accepted = 0;
    for (int tries = 0; tries < 200 && accepted < 12; ++tries) {
      if (pb.gadget() >= 0) ++accepted;
    }
    // fold so the output depends on the whole tail of the program
    int root = static_cast<int>(pb.prog.size()) - 1;
    root = pb.op2(Op::kAdd, root, root > 0 ? root - 1 : root);
    (void)root;

    const std::vector<Instr> prog = pb.prog;

    Tape tape;
    std::vector<Ad> ad_in;
    std::vector<VarRef> refs;
    for (double xi : x) {
      Ad v = make_var(tape, xi);
      ad_in.push_back(v);
      refs.push_back(v.ref);
    }
    Ad out = eval_program<Ad>(prog, ad_in, &tape);
    GradResult ad = backward(tape, out.ref, refs);

    auto f = [&prog](std::span<const double> p) {
      return eval_program<double>(prog, p, nullptr);
    };
    std::vector<double> fd = finite_diff_grad(f, x, 1e-5);

    for (std::size_t i = 0; i < n_inputs; ++i) {
      const double err =
          std::abs(ad.grads[i] - fd[i]) / std::max(1.0, std::abs(fd[i]));
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_case = c;
      }
    }
  }
  return report;
}

}  // namespace gmix
