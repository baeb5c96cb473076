#pragma once

// Generic helpers over parameter containers. A container exposes
//   template <class F> void visit(F&& f);        // f(name, std::span<double>, is_bias)
//   template <class F> void visit(F&& f) const;  // f(name, std::span<const double>, is_bias)
// with a fixed block order, which lets gradients, velocities and parameters
// share one type and be zipped block by block.

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace pheno {

template <class T>
struct BlockView {
  std::string name;
  std::span<T> data;
  bool is_bias = false;
};

template <class P>
std::vector<BlockView<double>> blocks(P& p) {
  std::vector<BlockView<double>> out;
  p.visit([&](const std::string& name, std::span<double> d, bool bias) {
    out.push_back({name, d, bias});
  });
  return out;
}

template <class P>
std::vector<BlockView<const double>> blocks(const P& p) {
  std::vector<BlockView<const double>> out;
  p.visit([&](const std::string& name, std::span<const double> d, bool bias) {
    out.push_back({name, d, bias});
  });
  return out;
}

template <class P>
void set_zero(P& p) {
  p.visit([](const std::string&, std::span<double> d, bool) {
    for (double& v : d) v = 0.0;
  });
}

template <class P>
P zeros_like(const P& p) {
  P out = p;
  set_zero(out);
  return out;
}

template <class P>
double squared_norm(const P& p) {
  double acc = 0.0;
  p.visit([&](const std::string&, std::span<const double> d, bool) {
    for (double v : d) acc += v * v;
  });
  return acc;
}

template <class P>
void scale_in_place(P& p, double factor) {
  p.visit([&](const std::string&, std::span<double> d, bool) {
    for (double& v : d) v *= factor;
  });
}

// y += a * x
template <class P>
void add_scaled(P& y, double a, const P& x) {
  auto yb = blocks(y);
  const auto xb = blocks(x);
  for (std::size_t k = 0; k < yb.size(); ++k)
    for (std::size_t i = 0; i < yb[k].data.size(); ++i) yb[k].data[i] += a * xb[k].data[i];
}

template <class P>
bool all_finite(const P& p) {
  bool ok = true;
  p.visit([&](const std::string&, std::span<const double> d, bool) {
    for (double v : d) ok = ok && std::isfinite(v);
  });
  return ok;
}

template <class P>
std::size_t parameter_count(const P& p) {
  std::size_t n = 0;
  p.visit([&](const std::string&, std::span<const double> d, bool) { n += d.size(); });
  return n;
}

template <class P>
bool bitwise_equal(const P& a, const P& b) {
  const auto ab = blocks(a);
  const auto bb = blocks(b);
  if (ab.size() != bb.size()) return false;
  for (std::size_t k = 0; k < ab.size(); ++k) {
    if (ab[k].data.size() != bb[k].data.size()) return false;
    for (std::size_t i = 0; i < ab[k].data.size(); ++i)
      if (ab[k].data[i] != bb[k].data[i]) return false;
  }
  return true;
}

// A bare vector of reals with the container interface; handy for tests and
// for scalar objectives.
struct FlatParams {
  std::vector<double> values;

  template <class F>
  void visit(F&& f) {
    f(std::string("theta"), std::span<double>(values), false);
  }
  template <class F>
  void visit(F&& f) const {
    f(std::string("theta"), std::span<const double>(values), false);
  }
};

}  // namespace pheno
