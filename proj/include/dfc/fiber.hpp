// Pointwise multilinear algebra of Lambda^{k,m} over an oriented orthonormal
// d-dimensional fiber: wedge, transposition, Hodge duals, interior products,
// the A-operator family and Bianchi sums.
#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dfc/multiindex.hpp"
#include "dfc/scalar.hpp"

namespace dfc {

enum class Side { Form, Vector };

template <class S>
struct FrameVector {
  std::vector<S> comps;  // length d
  int dim() const { return int(comps.size()); }
};

// A bidegree-(k,m) element as a sparse coefficient map over MultiIndexPair.
// Zero coefficients are absent (canonical form), so equality is literal.
template <class S>
class DoubleForm {
 public:
  using Coeffs = std::map<MultiIndexPair, S>;

  DoubleForm() = default;
  DoubleForm(int d, int k, int m) : d_(d), k_(k), m_(m) {}

  static DoubleForm zero(int d, int k, int m) { return DoubleForm(d, k, m); }

  // Degrees outside [0,d] denote the zero module; values there are empty.
  bool in_range() const { return k_ >= 0 && k_ <= d_ && m_ >= 0 && m_ <= d_; }

  int dim() const { return d_; }
  int form_degree() const { return k_; }
  int vector_degree() const { return m_; }
  const Coeffs& coeffs() const { return coeffs_; }
  bool is_zero() const { return coeffs_.empty(); }

  void set(const MultiIndexPair& key, S value) {
    if (!in_range()) return;
    if (int(key.form.size()) != k_ || int(key.vec.size()) != m_)
      throw std::domain_error("DoubleForm::set: key bidegree mismatch");
    if (!index_valid(key.form, d_) || !index_valid(key.vec, d_))
      throw std::domain_error("DoubleForm::set: invalid index");
    if (ScalarTraits<S>::is_zero(value)) {
      coeffs_.erase(key);
    } else {
      coeffs_[key] = std::move(value);
    }
  }

  void add(const MultiIndexPair& key, const S& value) {
    if (!in_range()) return;
    auto it = coeffs_.find(key);
    if (it == coeffs_.end()) {
      set(key, value);
    } else {
      it->second += value;
      if (ScalarTraits<S>::is_zero(it->second)) coeffs_.erase(it);
    }
  }

  S get(const MultiIndexPair& key) const {
    auto it = coeffs_.find(key);
    return it == coeffs_.end() ? ScalarTraits<S>::zero() : it->second;
  }

  friend bool operator==(const DoubleForm& a, const DoubleForm& b) {
    return a.d_ == b.d_ && a.k_ == b.k_ && a.m_ == b.m_ && a.coeffs_ == b.coeffs_;
  }

  DoubleForm& operator+=(const DoubleForm& o) {
    require_same_type(o, "operator+=");
    for (const auto& [key, v] : o.coeffs_) add(key, v);
    return *this;
  }
  DoubleForm& operator-=(const DoubleForm& o) {
    require_same_type(o, "operator-=");
    for (const auto& [key, v] : o.coeffs_) add(key, -v);
    return *this;
  }
  friend DoubleForm operator+(DoubleForm a, const DoubleForm& b) { return a += b; }
  friend DoubleForm operator-(DoubleForm a, const DoubleForm& b) { return a -= b; }
  friend DoubleForm operator*(const S& c, const DoubleForm& a) {
    DoubleForm out(a.d_, a.k_, a.m_);
    if (ScalarTraits<S>::is_zero(c)) return out;
    for (const auto& [key, v] : a.coeffs_) out.set(key, c * v);
    return out;
  }
  friend DoubleForm operator-(const DoubleForm& a) {
    return ScalarTraits<S>::from_int(-1) * a;
  }

 private:
  void require_same_type(const DoubleForm& o, const char* who) const {
    if (d_ != o.d_ || k_ != o.k_ || m_ != o.m_)
      throw std::domain_error(std::string(who) + ": bidegree/dimension mismatch");
  }

  int d_ = 0;
  int k_ = 0;
  int m_ = 0;
  Coeffs coeffs_;
};

// --- evaluation with sign bookkeeping ------------------------------------

// Sort an index tuple in place, counting transpositions; false on repeats.
inline bool sort_with_sign(Index& idx, int& sign) {
  sign = 1;
  for (std::size_t i = 1; i < idx.size(); ++i) {
    int v = idx[i];
    std::size_t j = i;
    while (j > 0 && idx[j - 1] > v) {
      idx[j] = idx[j - 1];
      --j;
      sign = -sign;
    }
    idx[j] = v;
    if (j > 0 && idx[j - 1] == v) return false;
  }
  return true;
}

// psi evaluated on possibly unsorted index tuples.
template <class S>
S eval_signed(const DoubleForm<S>& psi, Index form, Index vec) {
  int sf = 0, sv = 0;
  if (!sort_with_sign(form, sf)) return ScalarTraits<S>::zero();
  if (!sort_with_sign(vec, sv)) return ScalarTraits<S>::zero();
  S v = psi.get({form, vec});
  if (sf * sv < 0) return -v;
  return v;
}

// --- algebraic operations -------------------------------------------------

template <class S>
DoubleForm<S> wedge(const DoubleForm<S>& a, const DoubleForm<S>& b) {
  if (a.dim() != b.dim()) throw std::domain_error("wedge: dimension mismatch");
  int d = a.dim();
  DoubleForm<S> out(d, a.form_degree() + b.form_degree(),
                    a.vector_degree() + b.vector_degree());
  if (!out.in_range()) return out;
  Index mf, mv;
  for (const auto& [ka, va] : a.coeffs()) {
    for (const auto& [kb, vb] : b.coeffs()) {
      int sf = merge_sign(ka.form, kb.form, mf);
      if (sf == 0) continue;
      int sv = merge_sign(ka.vec, kb.vec, mv);
      if (sv == 0) continue;
      S term = va * vb;
      if (sf * sv < 0) term = -term;
      out.add({mf, mv}, term);
    }
  }
  return out;
}

template <class S>
DoubleForm<S> transpose(const DoubleForm<S>& a) {
  DoubleForm<S> out(a.dim(), a.vector_degree(), a.form_degree());
  for (const auto& [key, v] : a.coeffs()) out.set({key.vec, key.form}, v);
  return out;
}

template <class S>
S inner(const DoubleForm<S>& a, const DoubleForm<S>& b) {
  if (a.dim() != b.dim() || a.form_degree() != b.form_degree() ||
      a.vector_degree() != b.vector_degree())
    throw std::domain_error("inner: bidegree mismatch");
  S acc = ScalarTraits<S>::zero();
  for (const auto& [key, v] : a.coeffs()) {
    auto w = b.get(key);
    if (!ScalarTraits<S>::is_zero(w)) acc += v * w;
  }
  return acc;
}

template <class S>
DoubleForm<S> hodge(const DoubleForm<S>& a, Side side) {
  int d = a.dim();
  if (side == Side::Form) {
    DoubleForm<S> out(d, d - a.form_degree(), a.vector_degree());
    for (const auto& [key, v] : a.coeffs()) {
      int s = hodge_sign(key.form, d);
      S term = v;
      if (s < 0) term = -term;
      out.add({index_complement(key.form, d), key.vec}, term);
    }
    return out;
  }
  return transpose(hodge(transpose(a), Side::Form));
}

template <class S>
DoubleForm<S> interior(const FrameVector<S>& x, const DoubleForm<S>& a, Side side) {
  int d = a.dim();
  if (x.dim() != d) throw std::domain_error("interior: dimension mismatch");
  if (side == Side::Vector) return transpose(interior(x, transpose(a), Side::Form));
  DoubleForm<S> out(d, a.form_degree() - 1, a.vector_degree());
  if (!out.in_range()) return out;
  for (const auto& [key, v] : a.coeffs()) {
    for (std::size_t p = 0; p < key.form.size(); ++p) {
      const S& xc = x.comps[key.form[p] - 1];
      if (ScalarTraits<S>::is_zero(xc)) continue;
      S term = xc * v;
      if (p % 2 == 1) term = -term;
      out.add({index_without(key.form, key.form[p]), key.vec}, term);
    }
  }
  return out;
}

// Basis frame vector e_axis (axis in [1..d]).
template <class S>
FrameVector<S> basis_vector(int d, int axis) {
  FrameVector<S> x;
  x.comps.assign(d, ScalarTraits<S>::zero());
  x.comps[axis - 1] = ScalarTraits<S>::one();
  return x;
}

// The metric as the identity (1,1)-tensor in the orthonormal frame.
template <class S>
DoubleForm<S> metric_form(int d) {
  DoubleForm<S> g(d, 1, 1);
  for (int i = 1; i <= d; ++i) g.set({{i}, {i}}, ScalarTraits<S>::one());
  return g;
}

template <class S>
DoubleForm<S> scalar_form(int d, S value) {
  DoubleForm<S> f(d, 0, 0);
  f.set({{}, {}}, std::move(value));
  return f;
}

// --- the A-operator family ------------------------------------------------

enum class AOp { Wedge, Trace, I, IStar };

template <class S>
DoubleForm<S> a_operator(const DoubleForm<S>& A, const DoubleForm<S>& a, AOp which) {
  if (A.dim() != a.dim()) throw std::domain_error("a_operator: dimension mismatch");
  if (A.form_degree() != A.vector_degree() || !(transpose(A) == A))
    throw std::domain_error("a_operator: A must be symmetric");
  int d = a.dim();
  int k = a.form_degree(), m = a.vector_degree();
  auto starV = [](const DoubleForm<S>& f) { return hodge(f, Side::Vector); };
  auto star = [](const DoubleForm<S>& f) { return hodge(f, Side::Form); };
  switch (which) {
    case AOp::Wedge:
      return wedge(A, a);
    case AOp::Trace: {
      auto r = star(starV(wedge(A, star(starV(a)))));
      if ((d * k + d * m) % 2 == 1) r = -r;
      return r;
    }
    case AOp::I: {
      auto r = starV(wedge(A, starV(a)));
      if ((d * m + d) % 2 == 1) r = -r;
      return r;
    }
    case AOp::IStar: {
      auto r = star(wedge(A, star(a)));
      if ((d * k + d) % 2 == 1) r = -r;
      return r;
    }
  }
  throw std::logic_error("a_operator: unreachable");
}

// Metric contraction of the first index couple, from its local frame formula
// Tr psi = sum_i i^V_{E_i} i_{E_i} psi. Independent of the A-operator route.
template <class S>
DoubleForm<S> trace_direct(const DoubleForm<S>& a) {
  int d = a.dim();
  DoubleForm<S> out(d, a.form_degree() - 1, a.vector_degree() - 1);
  if (!out.in_range()) return out;
  for (int i = 1; i <= d; ++i) {
    auto e = basis_vector<S>(d, i);
    out += interior(e, interior(e, a, Side::Form), Side::Vector);
  }
  return out;
}

// Bianchi sum from its defining alternating sum, independent of i_g.
template <class S>
DoubleForm<S> bianchi_direct(const DoubleForm<S>& psi) {
  int d = psi.dim();
  int k = psi.form_degree(), m = psi.vector_degree();
  DoubleForm<S> out(d, k + 1, m - 1);
  if (!out.in_range()) return out;
  for (const auto& key : enumerate_basis(d, k + 1, m - 1)) {
    S acc = ScalarTraits<S>::zero();
    for (std::size_t j = 0; j < key.form.size(); ++j) {
      Index xs = index_without(key.form, key.form[j]);
      Index ys;
      ys.reserve(key.vec.size() + 1);
      ys.push_back(key.form[j]);
      for (int y : key.vec) ys.push_back(y);
      S term = eval_signed(psi, xs, ys);
      if (j % 2 == 1) term = -term;
      acc += term;
    }
    if (!ScalarTraits<S>::is_zero(acc)) out.add(key, acc);
  }
  return out;
}

template <class S>
DoubleForm<S> bianchi_v_direct(const DoubleForm<S>& psi) {
  return transpose(bianchi_direct(transpose(psi)));
}

template <class S>
DoubleForm<S> symmetrize(const DoubleForm<S>& a) {
  if (a.form_degree() != a.vector_degree())
    throw std::domain_error("symmetrize: requires k == m");
  S half = ScalarTraits<S>::one() / ScalarTraits<S>::from_int(2);
  return half * (a + transpose(a));
}

// Matrix of a linear fiber operator in the canonical bases (column j = image
// of the j-th source basis element); rows/cols follow enumerate_basis order.
template <class S, class Op>
std::vector<std::vector<S>> operator_matrix(int d, int k_src, int m_src, int k_dst,
                                            int m_dst, Op&& op) {
  // out-of-range degrees yield empty matrices
  std::vector<MultiIndexPair> src;
  if (k_src >= 0 && k_src <= d && m_src >= 0 && m_src <= d)
    src = enumerate_basis(d, k_src, m_src);
  std::vector<MultiIndexPair> dst;
  if (k_dst >= 0 && k_dst <= d && m_dst >= 0 && m_dst <= d)
    dst = enumerate_basis(d, k_dst, m_dst);
  std::vector<std::vector<S>> mat(dst.size(), std::vector<S>(src.size(), ScalarTraits<S>::zero()));
  for (std::size_t j = 0; j < src.size(); ++j) {
    DoubleForm<S> e(d, k_src, m_src);
    e.set(src[j], ScalarTraits<S>::one());
    DoubleForm<S> img = op(e);
    if (img.form_degree() != k_dst || img.vector_degree() != m_dst)
      throw std::logic_error("operator_matrix: unexpected target bidegree");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      S v = img.get(dst[i]);
      if (!ScalarTraits<S>::is_zero(v)) mat[i][j] = v;
    }
  }
  return mat;
}

template <class S>
DoubleForm<double> to_double_form(const DoubleForm<S>& a) {
  DoubleForm<double> out(a.dim(), a.form_degree(), a.vector_degree());
  for (const auto& [key, v] : a.coeffs()) out.set(key, to_double(v));
  return out;
}

}  // namespace dfc
