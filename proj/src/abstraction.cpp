#include "symnet/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include "symnet/binio.hpp"
#include "symnet/errors.hpp"

namespace symnet {

std::span<const std::uint32_t> SymbolicModel::successors(std::size_t s, int p,
                                                         std::size_t wi) const {
  const std::uint64_t c = cell(s, p, wi);
  return {targets.data() + offsets[c], targets.data() + offsets[c + 1]};
}

bool SymbolicModel::non_progressing(std::size_t s, int p) const {
  if (nw() == 0) return true;  /* no admissible internal input at all */
  for (std::size_t wi = 0; wi < nw(); ++wi)
    if (successors(s, p, wi).empty()) return true;
  return false;
}

std::optional<std::uint32_t> SymbolicModel::index_of(const IVec& k) const {
  const auto it = std::lower_bound(grid.begin(), grid.end(), k);
  if (it == grid.end() || *it != k) return std::nullopt;
  return static_cast<std::uint32_t>(it - grid.begin());
}

/* ---- successor enumeration --------------------------------------------- */

namespace {

/* per-box integer index windows of the state set, computed once per call */
struct GridWindows {
  std::vector<IVec> lo, hi;
};

GridWindows state_windows(const BoxUnion& s, double eta) {
  GridWindows w;
  for (const Box& b : s.boxes) {
    IVec lo(b.lo.size()), hi(b.lo.size());
    bool ok = true;
    for (std::size_t d = 0; d < b.lo.size(); ++d) {
      lo[d] = snap_ceil(b.lo[d], eta);
      hi[d] = snap_floor(b.hi[d], eta);
      if (lo[d] > hi[d]) ok = false;
    }
    if (ok) {
      w.lo.push_back(std::move(lo));
      w.hi.push_back(std::move(hi));
    }
  }
  return w;
}

bool in_windows(const GridWindows& w, const IVec& k) {
  for (std::size_t b = 0; b < w.lo.size(); ++b) {
    bool inside = true;
    for (std::size_t d = 0; d < k.size(); ++d)
      if (k[d] < w.lo[b][d] || k[d] > w.hi[b][d]) {
        inside = false;
        break;
      }
    if (inside) return true;
  }
  return false;
}

/* grid points within eta (sup norm) of img, restricted to the windows;
 * the candidate range per dimension safely covers |img - k*eta| <= eta */
void ball_hits(const Vec& img, double eta, const GridWindows& w,
               std::vector<IVec>& out) {
  out.clear();
  const std::size_t dim = img.size();
  IVec lo(dim), hi(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double r = img[d] / eta;
    if (!std::isfinite(r)) return;
    if (std::abs(r) > 9.0e15) return;  // out of index range, no hit possible
    const auto base = static_cast<std::int64_t>(std::floor(r));
    lo[d] = base - 2;
    hi[d] = base + 2;
  }
  IVec k = lo;
  while (true) {
    bool within = true;
    for (std::size_t d = 0; d < dim; ++d)
      if (std::abs(img[d] - static_cast<double>(k[d]) * eta) > eta) {
        within = false;
        break;
      }
    if (within && in_windows(w, k)) out.push_back(k);

    std::size_t d = dim;
    while (true) {
      if (d == 0) return;
      --d;
      if (k[d] < hi[d]) {
        ++k[d];
        for (std::size_t e = d + 1; e < dim; ++e) k[e] = lo[e];
        break;
      }
    }
  }
}

}  // namespace

std::vector<IVec> abstract_successors(const SwitchedSubsystem& sub, const IVec& xhat,
                                      int p, const Vec& what, double eta) {
  if (eta <= 0.0) throw ParamError("grid parameter must be positive");
  const GridWindows w = state_windows(sub.state_set, eta);
  if (!in_windows(w, xhat)) throw InputError("source point is not a grid point");
  const Vec img = step(sub, p, grid_point(xhat, eta), what);
  std::vector<IVec> hits;
  ball_hits(img, eta, w, hits);
  return hits;
}

/* ---- model construction ------------------------------------------------- */

SymbolicModel build_symbolic_model(const SwitchedSubsystem& sub, double eta,
                                   double varpi, const std::vector<Vec>* w_override,
                                   int workers) {
  validate_subsystem(sub);
  if (eta <= 0.0) throw ParamError("grid parameter must be positive");
  if (!w_override) {
    if (varpi < 0.0 || (sub.wdim() > 0 && varpi > span(sub.internal_input_set)))
      throw ParamError("internal input grid parameter out of range");
  }
  if (workers < 1) throw ParamError("worker count must be >= 1");

  SymbolicModel mod;
  mod.eta = eta;
  mod.varpi = varpi;
  mod.dim = sub.dim();
  mod.wdim = sub.wdim();
  mod.m = sub.n_modes();
  mod.dwell = sub.dwell;
  mod.C1 = sub.C1;
  mod.C2 = sub.C2;
  mod.grid = quantize_set(sub.state_set, eta);
  if (mod.grid.empty()) throw ParamError("state grid is empty at this eta");
  if (mod.grid.size() > std::numeric_limits<std::uint32_t>::max())
    throw ParamError("state grid exceeds the 32-bit index range");

  if (w_override) {
    mod.wpoints = *w_override;
    mod.w_overridden = true;
    for (const Vec& wp : mod.wpoints) {
      if (static_cast<int>(wp.size()) != mod.wdim)
        throw InputError("override internal input has wrong dimension");
      if (mod.wdim > 0 && !sub.internal_input_set.contains(wp, 1e-9))
        throw InputError("override internal input outside the input set");
    }
    if (mod.wpoints.empty())
      throw InputError("override internal input set is empty");
  } else if (mod.wdim == 0) {
    mod.wpoints = {Vec{}};
  } else {
    if (varpi == 0.0) {
      const Vec origin(static_cast<std::size_t>(mod.wdim), 0.0);
      if (!sub.internal_input_set.contains(origin, 0.0))
        throw ParamError("zero internal-input grid needs the origin in the set");
      mod.wpoints = {origin};
    } else {
      for (const IVec& k : quantize_set(sub.internal_input_set, varpi))
        mod.wpoints.push_back(grid_point(k, varpi));
      if (mod.wpoints.empty())
        throw ParamError("internal input grid is empty at this varpi");
    }
  }

  const std::size_t ns = mod.grid.size();
  const std::size_t nwp = mod.wpoints.size();
  const std::size_t ncells = ns * static_cast<std::size_t>(mod.m) * nwp;
  std::vector<std::vector<std::uint32_t>> cells(ncells);

  const GridWindows windows = state_windows(sub.state_set, eta);
  auto process_range = [&](std::size_t s_begin, std::size_t s_end) {
    std::vector<IVec> hits;
    for (std::size_t s = s_begin; s < s_end; ++s) {
      const Vec x = grid_point(mod.grid[s], eta);
      for (int p = 0; p < mod.m; ++p) {
        for (std::size_t wi = 0; wi < nwp; ++wi) {
          const Vec img = step(sub, p, x, mod.wpoints[wi]);
          ball_hits(img, eta, windows, hits);
          auto& cell = cells[mod.cell(s, p, wi)];
          cell.reserve(hits.size());
          for (const IVec& k : hits) {
            const auto idx = mod.index_of(k);
            if (idx) cell.push_back(*idx);
          }
          std::sort(cell.begin(), cell.end());
        }
      }
    }
  };

  const int nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), ns);
  if (nthreads <= 1) {
    process_range(0, ns);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (ns + static_cast<std::size_t>(nthreads) - 1) /
                              static_cast<std::size_t>(nthreads);
    for (int t = 0; t < nthreads; ++t) {
      const std::size_t b = static_cast<std::size_t>(t) * chunk;
      const std::size_t e = std::min(ns, b + chunk);
      if (b >= e) break;
      pool.emplace_back(process_range, b, e);
    }
    for (auto& th : pool) th.join();
  }

  mod.offsets.assign(ncells + 1, 0);
  std::uint64_t total = 0;
  for (std::size_t c = 0; c < ncells; ++c) {
    mod.offsets[c] = total;
    total += cells[c].size();
  }
  mod.offsets[ncells] = total;
  mod.targets.resize(total);
  for (std::size_t c = 0; c < ncells; ++c)
    std::copy(cells[c].begin(), cells[c].end(), mod.targets.begin() + static_cast<std::ptrdiff_t>(mod.offsets[c]));
  return mod;
}

/* ---- serialization ------------------------------------------------------ */

namespace {

constexpr char kMagic[4] = {'S', 'M', 'D', 'L'};
constexpr std::uint16_t kVersion = 1;

using namespace binio;

std::string encode_payload(const SymbolicModel& m) {
  std::string pl;
  /* grid: per-coordinate deltas against the previous point */
  IVec prev(static_cast<std::size_t>(m.dim), 0);
  for (const IVec& k : m.grid) {
    for (std::size_t d = 0; d < k.size(); ++d) {
      put_varint(pl, zigzag(k[d] - prev[d]));
    }
    prev = k;
  }
  /* internal input points, raw bits for exact round-trips */
  for (const Vec& wp : m.wpoints)
    for (double v : wp) put_f64(pl, v);
  for (double v : m.C1.a) put_f64(pl, v);
  for (double v : m.C2.a) put_f64(pl, v);
  /* transition blocks: per cell a count, the first target, then gaps */
  for (std::size_t c = 0; c + 1 < m.offsets.size(); ++c) {
    const std::uint64_t b = m.offsets[c], e = m.offsets[c + 1];
    put_varint(pl, e - b);
    for (std::uint64_t i = b; i < e; ++i) {
      if (i == b)
        put_varint(pl, m.targets[i]);
      else
        put_varint(pl, m.targets[i] - m.targets[i - 1]);
    }
  }
  return pl;
}

}  // namespace

std::uint64_t SymbolicModel::digest() const { return fnv1a(encode_payload(*this)); }

void save_model(const SymbolicModel& m, const std::string& path) {
  const std::string payload = encode_payload(m);
  std::string head;
  head.append(kMagic, 4);
  put_u16(head, kVersion);
  put_u16(head, m.w_overridden ? 1 : 0);
  put_u32(head, static_cast<std::uint32_t>(m.dim));
  put_u32(head, static_cast<std::uint32_t>(m.wdim));
  put_u32(head, static_cast<std::uint32_t>(m.m));
  put_u32(head, static_cast<std::uint32_t>(m.dwell));
  put_f64(head, m.eta);
  put_f64(head, m.varpi);
  put_u64(head, m.grid.size());
  put_u64(head, m.wpoints.size());
  put_u32(head, static_cast<std::uint32_t>(m.C1.rows));
  put_u32(head, static_cast<std::uint32_t>(m.C2.rows));
  /* per-dimension grid index bounds, informational */
  for (int d = 0; d < m.dim; ++d) {
    std::int64_t lo = 0, hi = 0;
    if (!m.grid.empty()) {
      lo = hi = m.grid.front()[static_cast<std::size_t>(d)];
      for (const IVec& k : m.grid) {
        lo = std::min(lo, k[static_cast<std::size_t>(d)]);
        hi = std::max(hi, k[static_cast<std::size_t>(d)]);
      }
    }
    put_u64(head, static_cast<std::uint64_t>(lo));
    put_u64(head, static_cast<std::uint64_t>(hi));
  }
  put_u64(head, fnv1a(payload));
  put_u64(head, payload.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

SymbolicModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  Reader r(reinterpret_cast<const unsigned char*>(data.data()),
           reinterpret_cast<const unsigned char*>(data.data()) + data.size(),
           "model file");

  r.need(4);
  if (std::memcmp(r.p, kMagic, 4) != 0) throw FormatError("not a model file");
  r.p += 4;
  if (r.u16() != kVersion) throw FormatError("unsupported model format version");
  const std::uint16_t flags = r.u16();

  SymbolicModel m;
  m.w_overridden = (flags & 1) != 0;
  m.dim = static_cast<int>(r.u32());
  m.wdim = static_cast<int>(r.u32());
  m.m = static_cast<int>(r.u32());
  m.dwell = static_cast<int>(r.u32());
  m.eta = r.f64();
  m.varpi = r.f64();
  const std::uint64_t ngrid = r.u64();
  const std::uint64_t nwp = r.u64();
  const std::uint32_t c1rows = r.u32();
  const std::uint32_t c2rows = r.u32();
  for (int d = 0; d < 2 * m.dim; ++d) r.u64();  // grid bounds, informational
  const std::uint64_t digest = r.u64();
  const std::uint64_t paysize = r.u64();

  if (static_cast<std::uint64_t>(r.end - r.p) != paysize)
    throw FormatError("model payload size mismatch");
  const std::string payload(reinterpret_cast<const char*>(r.p), paysize);
  if (fnv1a(payload) != digest)
    throw FormatError("model digest mismatch (corrupt file)");

  if (m.dim < 0 || m.m <= 0 || m.dwell < 1)
    throw FormatError("model header out of range");

  m.grid.reserve(ngrid);
  IVec prev(static_cast<std::size_t>(m.dim), 0);
  for (std::uint64_t i = 0; i < ngrid; ++i) {
    IVec k(static_cast<std::size_t>(m.dim));
    for (int d = 0; d < m.dim; ++d) {
      prev[static_cast<std::size_t>(d)] += unzigzag(r.varint());
      k[static_cast<std::size_t>(d)] = prev[static_cast<std::size_t>(d)];
    }
    m.grid.push_back(std::move(k));
  }
  m.wpoints.reserve(nwp);
  for (std::uint64_t i = 0; i < nwp; ++i) {
    Vec wp(static_cast<std::size_t>(m.wdim));
    for (int d = 0; d < m.wdim; ++d) wp[static_cast<std::size_t>(d)] = r.f64();
    m.wpoints.push_back(std::move(wp));
  }
  m.C1 = Mat(static_cast<int>(c1rows), m.dim);
  for (double& v : m.C1.a) v = r.f64();
  m.C2 = Mat(static_cast<int>(c2rows), m.dim);
  for (double& v : m.C2.a) v = r.f64();

  const std::size_t ncells = m.n_cells();
  m.offsets.assign(ncells + 1, 0);
  std::vector<std::uint32_t> tg;
  for (std::size_t c = 0; c < ncells; ++c) {
    const std::uint64_t count = r.varint();
    m.offsets[c + 1] = m.offsets[c] + count;
    std::uint32_t cur = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::uint64_t v = r.varint();
      cur = (i == 0) ? static_cast<std::uint32_t>(v)
                     : cur + static_cast<std::uint32_t>(v);
      if (cur >= m.grid.size()) throw FormatError("target index out of range");
      tg.push_back(cur);
    }
  }
  if (r.p != r.end) throw FormatError("trailing bytes in model file");
  m.targets = std::move(tg);
  return m;
}

}  // namespace symnet
