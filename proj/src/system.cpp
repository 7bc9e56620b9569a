#include "symnet/system.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "symnet/errors.hpp"

namespace symnet {

bool Box::contains(const Vec& x, double tol) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t d = 0; d < x.size(); ++d)
    if (x[d] < lo[d] - tol || x[d] > hi[d] + tol) return false;
  return true;
}

std::optional<Box> Box::deflated(double shrink) const {
  Box b = *this;
  for (std::size_t d = 0; d < lo.size(); ++d) {
    b.lo[d] += shrink;
    b.hi[d] -= shrink;
    if (b.lo[d] > b.hi[d]) return std::nullopt;
  }
  return b;
}

bool BoxUnion::contains(const Vec& x, double tol) const {
  for (const Box& b : boxes)
    if (b.contains(x, tol)) return true;
  return false;
}

void validate_box(const Box& b) {
  if (b.lo.size() != b.hi.size())
    throw InputError("box bounds have different dimensions");
  for (std::size_t d = 0; d < b.lo.size(); ++d) {
    if (!std::isfinite(b.lo[d]) || !std::isfinite(b.hi[d]))
      throw InputError("box bounds must be finite");
    if (b.lo[d] > b.hi[d]) throw InputError("box has lo > hi");
  }
}

void validate_box_union(const BoxUnion& s) {
  for (const Box& b : s.boxes) {
    validate_box(b);
    if (b.dim() != s.dim())
      throw InputError("box union mixes dimensions");
  }
}

double span(const BoxUnion& s) {
  double m = HUGE_VAL;
  for (const Box& b : s.boxes)
    for (std::size_t d = 0; d < b.lo.size(); ++d)
      m = std::min(m, b.hi[d] - b.lo[d]);
  return s.boxes.empty() ? 0.0 : m;
}

double euclid_diameter(const BoxUnion& s) {
  double best = 0.0;
  for (const Box& b1 : s.boxes)
    for (const Box& b2 : s.boxes) {
      double acc = 0.0;
      for (std::size_t d = 0; d < b1.lo.size(); ++d) {
        const double spread =
            std::max(std::abs(b1.hi[d] - b2.lo[d]), std::abs(b2.hi[d] - b1.lo[d]));
        acc += spread * spread;
      }
      best = std::max(best, acc);
    }
  return std::sqrt(best);
}

BoxUnion linear_image(const Mat& m, const BoxUnion& s) {
  if (s.dim() != m.cols && !(s.boxes.empty() && m.cols == 0))
    throw InputError("linear image dimension mismatch");
  BoxUnion out;
  for (const Box& b : s.boxes) {
    Box ib;
    ib.lo.assign(static_cast<std::size_t>(m.rows), 0.0);
    ib.hi.assign(static_cast<std::size_t>(m.rows), 0.0);
    for (int i = 0; i < m.rows; ++i) {
      double lo = 0.0, hi = 0.0;
      for (int j = 0; j < m.cols; ++j) {
        const double c = m(i, j);
        if (c >= 0.0) {
          lo += c * b.lo[static_cast<std::size_t>(j)];
          hi += c * b.hi[static_cast<std::size_t>(j)];
        } else {
          lo += c * b.hi[static_cast<std::size_t>(j)];
          hi += c * b.lo[static_cast<std::size_t>(j)];
        }
      }
      ib.lo[static_cast<std::size_t>(i)] = lo;
      ib.hi[static_cast<std::size_t>(i)] = hi;
    }
    out.boxes.push_back(std::move(ib));
  }
  return out;
}

double PowerK::operator()(double s) const {
  if (s < 0.0) throw ParamError("class-K functions take nonnegative arguments");
  return coeff * std::pow(s, exp);
}

PowerK PowerK::inverse() const {
  if (coeff <= 0.0 || exp <= 0.0)
    throw ParamError("power-law inversion needs positive coefficient and exponent");
  return {std::pow(coeff, -1.0 / exp), 1.0 / exp};
}

PowerK PowerK::compose(const PowerK& g) const {
  /* this(g(s)) = coeff * (g.coeff s^{g.exp})^{exp} */
  return {coeff * std::pow(g.coeff, exp), exp * g.exp};
}

QuadK operator+(const QuadK& x, const QuadK& y) {
  return {x.quad + y.quad, x.lin + y.lin};
}

void validate_subsystem(const SwitchedSubsystem& sub) {
  validate_box_union(sub.state_set);
  validate_box_union(sub.internal_input_set);
  if (sub.state_set.empty()) throw InputError("state set is empty");
  if (sub.modes.empty()) throw InputError("subsystem needs at least one mode");
  if (sub.dwell < 1) throw ParamError("dwell time must be >= 1");
  const int n = sub.dim();
  const int wd = sub.wdim();
  for (const ModeDynamics& md : sub.modes) {
    if (md.custom) continue;
    if (md.A.rows != n || md.A.cols != n)
      throw InputError("mode matrix A has wrong shape");
    if (md.D.rows != n || md.D.cols != wd)
      throw InputError("mode matrix D has wrong shape");
    if (static_cast<int>(md.B.size()) != n)
      throw InputError("mode offset B has wrong dimension");
  }
  if (sub.C1.cols != n || sub.C2.cols != n)
    throw InputError("output matrices must have state dimension columns");
}

Vec step(const SwitchedSubsystem& sub, int p, const Vec& x, const Vec& w) {
  if (p < 0 || p >= sub.n_modes()) throw InputError("mode index out of range");
  if (static_cast<int>(x.size()) != sub.dim())
    throw InputError("state dimension mismatch in step");
  if (static_cast<int>(w.size()) != sub.wdim())
    throw InputError("internal input dimension mismatch in step");
  const ModeDynamics& md = sub.modes[static_cast<std::size_t>(p)];
  if (md.custom) return md.custom(x, w);
  Vec next = md.A * x;
  if (sub.wdim() > 0) next = vec_add(next, md.D * w);
  return vec_add(next, md.B);
}

Vec output1(const SwitchedSubsystem& sub, const Vec& x) { return sub.C1 * x; }
Vec output2(const SwitchedSubsystem& sub, const Vec& x) { return sub.C2 * x; }

bool validate_switching_signal(const std::vector<int>& modes, int dwell) {
  if (dwell < 1) throw ParamError("dwell time must be >= 1");
  if (modes.empty()) return true;
  /* treat t = 0 like a switching instant: the first block must also respect
   * the dwell time, matching the counter-automaton semantics that starts
   * with a zeroed counter */
  std::size_t block_start = 0;
  for (std::size_t t = 1; t < modes.size(); ++t) {
    if (modes[t] != modes[t - 1]) {
      if (t - block_start < static_cast<std::size_t>(dwell)) return false;
      block_start = t;
    }
  }
  return true;
}

std::int64_t snap_ceil(double x, double eta) {
  if (eta <= 0.0) throw ParamError("grid parameter must be positive");
  const double r = x / eta;
  const double k = std::round(r);
  if (std::abs(r - k) <= 1e-9 * std::max(1.0, std::abs(k)))
    return static_cast<std::int64_t>(k);
  return static_cast<std::int64_t>(std::ceil(r));
}

std::int64_t snap_floor(double x, double eta) {
  if (eta <= 0.0) throw ParamError("grid parameter must be positive");
  const double r = x / eta;
  const double k = std::round(r);
  if (std::abs(r - k) <= 1e-9 * std::max(1.0, std::abs(k)))
    return static_cast<std::int64_t>(k);
  return static_cast<std::int64_t>(std::floor(r));
}

Vec grid_point(const IVec& k, double eta) {
  Vec x(k.size());
  for (std::size_t d = 0; d < k.size(); ++d)
    x[d] = static_cast<double>(k[d]) * eta;
  return x;
}

namespace {

/* integer index ranges of one box; empty optional when no multiple fits */
std::optional<std::pair<IVec, IVec>> index_ranges(const Box& b, double eta) {
  IVec lo(b.lo.size()), hi(b.lo.size());
  for (std::size_t d = 0; d < b.lo.size(); ++d) {
    lo[d] = snap_ceil(b.lo[d], eta);
    hi[d] = snap_floor(b.hi[d], eta);
    if (lo[d] > hi[d]) return std::nullopt;
  }
  return std::make_pair(lo, hi);
}

template <typename F>
void enumerate_range(const IVec& lo, const IVec& hi, F&& f) {
  IVec k = lo;
  const std::size_t dim = lo.size();
  if (dim == 0) {
    f(k);
    return;
  }
  while (true) {
    f(k);
    std::size_t d = dim;
    while (d > 0) {
      --d;
      if (k[d] < hi[d]) {
        ++k[d];
        for (std::size_t e = d + 1; e < dim; ++e) k[e] = lo[e];
        break;
      }
      if (d == 0) return;
    }
  }
}

}  // namespace

std::vector<IVec> quantize_set(const BoxUnion& s, double eta) {
  validate_box_union(s);
  if (!(eta > 0.0)) throw ParamError("grid parameter must be positive");
  if (eta > span(s) * (1.0 + 1e-12))
    throw ParamError(
        "grid parameter exceeds the set span, so the grid could miss a box");
  if (s.boxes.size() == 1) {
    std::vector<IVec> pts;
    const auto r = index_ranges(s.boxes.front(), eta);
    if (!r) return pts;
    enumerate_range(r->first, r->second, [&](const IVec& k) { pts.push_back(k); });
    return pts;  // row-major enumeration is already lexicographic
  }
  std::set<IVec> uniq;
  for (const Box& b : s.boxes) {
    const auto r = index_ranges(b, eta);
    if (!r) continue;
    enumerate_range(r->first, r->second, [&](const IVec& k) { uniq.insert(k); });
  }
  return std::vector<IVec>(uniq.begin(), uniq.end());
}

std::uint64_t grid_point_count(const BoxUnion& s, double eta) {
  validate_box_union(s);
  if (s.boxes.size() == 1) {
    const auto r = index_ranges(s.boxes.front(), eta);
    if (!r) return 0;
    std::uint64_t count = 1;
    for (std::size_t d = 0; d < r->first.size(); ++d)
      count *= static_cast<std::uint64_t>(r->second[d] - r->first[d] + 1);
    return count;
  }
  return static_cast<std::uint64_t>(quantize_set(s, eta).size());
}

}  // namespace symnet
