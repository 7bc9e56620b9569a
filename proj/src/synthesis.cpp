#include "symnet/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <thread>

#include "symnet/binio.hpp"
#include "symnet/errors.hpp"

namespace symnet {

/* ---- fairness counter ---------------------------------------------------- */

int fairness_initial(int p, int red_mode, int limit) {
  if (limit < 0) return 0;
  return p == red_mode ? 1 : 0;
}

int fairness_next(int c, int p_next, int red_mode, int limit) {
  if (limit < 0) return 0;
  return p_next == red_mode ? c + 1 : 0;
}

bool fairness_blocks(int c, int p_next, int red_mode, int limit) {
  if (limit < 0) return false;
  return p_next == red_mode && c >= limit;
}

/* ---- controller container ------------------------------------------------ */

std::size_t Controller::flat(std::size_t s, int p, int l, int c) const {
  return ((s * static_cast<std::size_t>(m) + static_cast<std::size_t>(p)) *
              static_cast<std::size_t>(dwell) +
          static_cast<std::size_t>(l)) *
             static_cast<std::size_t>(cdim()) +
         static_cast<std::size_t>(c);
}

std::uint64_t Controller::mask(std::size_t s, int p, int l, int c) const {
  if (s >= n_states() || p < 0 || p >= m || l < 0 || l >= dwell || c < 0 ||
      c >= cdim())
    return 0;
  return moves[flat(s, p, l, c)];
}

std::optional<std::size_t> Controller::index_of(const IVec& k) const {
  const auto it = std::lower_bound(grid.begin(), grid.end(), k);
  if (it == grid.end() || *it != k) return std::nullopt;
  return static_cast<std::size_t>(it - grid.begin());
}

std::size_t Controller::domain_size() const {
  std::size_t n = 0;
  for (std::uint64_t v : moves) n += (v != 0);
  return n;
}

/* ---- safety game ---------------------------------------------------------- */

namespace {

bool valid_counter(int p, int c, int red_mode, int limit) {
  if (limit < 0) return c == 0;
  return p == red_mode ? (c >= 1 && c <= limit) : c == 0;
}

BoxUnion erode(const BoxUnion& safe, double shrink) {
  BoxUnion out;
  for (const Box& b : safe.boxes)
    if (auto d = b.deflated(shrink)) out.boxes.push_back(*d);
  return out;
}

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

std::uint64_t spec_digest_of(const SafetySpec& spec) {
  std::string enc;
  binio::put_u64(enc, spec.safe.boxes.size());
  for (const Box& b : spec.safe.boxes) {
    binio::put_u64(enc, b.lo.size());
    for (double v : b.lo) binio::put_f64(enc, v);
    for (double v : b.hi) binio::put_f64(enc, v);
  }
  binio::put_f64(enc, spec.shrink);
  binio::put_u64(enc, binio::zigzag(spec.fairness_limit));
  binio::put_u64(enc, binio::zigzag(spec.red_mode));
  return binio::fnv1a(enc);
}

SynthesisResult solve_safety_game(const SymbolicModel& model, const SafetySpec& spec,
                                  int workers) {
  if (model.m > 64)
    throw SynthesisInfeasible("mode count exceeds the 64-bit move mask", 0);
  if (spec.fairness_limit == 0)
    throw ParamError("fairness limit must be positive (or negative to disable)");
  if (spec.fairness_limit > 0 &&
      (spec.red_mode < 0 || spec.red_mode >= model.m))
    throw ParamError("fairness mode index out of range");
  if (spec.shrink < 0.0) throw ParamError("erosion width must be nonnegative");
  validate_box_union(spec.safe);
  for (const Box& b : spec.safe.boxes)
    if (static_cast<int>(b.lo.size()) != model.C1.rows)
      throw InputError("safe set dimension does not match the primary output");

  SynthesisResult res;
  Controller& ctrl = res.controller;
  ctrl.eta = model.eta;
  ctrl.dim = model.dim;
  ctrl.m = model.m;
  ctrl.dwell = model.dwell;
  ctrl.fairness_limit = spec.fairness_limit;
  ctrl.red_mode = spec.red_mode;
  ctrl.shrink = spec.shrink;
  ctrl.model_digest = model.digest();
  ctrl.spec_digest = spec_digest_of(spec);
  ctrl.grid = model.grid;

  const std::size_t ns = model.n_states();
  const int m = model.m;
  const int dwell = model.dwell;
  const int cdim = ctrl.cdim();
  const std::size_t total =
      ns * static_cast<std::size_t>(m) * static_cast<std::size_t>(dwell) *
      static_cast<std::size_t>(cdim);
  ctrl.moves.assign(total, 0);

  const BoxUnion eroded = erode(spec.safe, spec.shrink);

  std::vector<std::uint8_t> in_q(total, 0);
  if (!eroded.boxes.empty()) {
    for (std::size_t s = 0; s < ns; ++s) {
      if (!eroded.contains(model.out1(s), 1e-9)) continue;
      for (int p = 0; p < m; ++p) {
        if (model.non_progressing(s, p)) continue;  /* conservative exclusion */
        for (int l = 0; l < dwell; ++l)
          for (int c = 0; c < cdim; ++c)
            if (valid_counter(p, c, spec.red_mode, spec.fairness_limit))
              in_q[ctrl.flat(s, p, l, c)] = 1;
      }
    }
  }
  for (std::uint8_t b : in_q) res.initial_states += b;

  if (res.initial_states == 0) {
    res.final_states = 0;
    res.iterations = 0;
    return res;
  }

  const std::size_t nw = model.nw();
  std::vector<std::uint8_t> next_q(total, 0);

  /* one synchronous sweep over a contiguous state range */
  const auto sweep_range = [&](std::size_t s_begin, std::size_t s_end) {
    for (std::size_t s = s_begin; s < s_end; ++s) {
      for (int p = 0; p < m; ++p) {
        for (int l = 0; l < dwell; ++l) {
          for (int c = 0; c < cdim; ++c) {
            const std::size_t idx = ctrl.flat(s, p, l, c);
            if (!in_q[idx]) {
              ctrl.moves[idx] = 0;
              next_q[idx] = 0;
              continue;
            }
            std::uint64_t mask = 0;
            for (int u = 0; u < m; ++u) {
              if (l < dwell - 1 && u != p) continue;  /* dwell-blocked request */
              const int pn = (l < dwell - 1) ? p : u;
              const int ln = (pn == p) ? std::min(l + 1, dwell - 1) : 0;
              if (fairness_blocks(c, pn, spec.red_mode, spec.fairness_limit))
                continue;
              const int cn =
                  fairness_next(c, pn, spec.red_mode, spec.fairness_limit);
              bool ok = true;
              for (std::size_t wi = 0; wi < nw && ok; ++wi) {
                const auto span = model.successors(s, p, wi);
                if (span.empty()) {
                  ok = false;  /* blocked branch: the environment wins */
                  break;
                }
                for (std::uint32_t t : span) {
                  if (!in_q[ctrl.flat(t, pn, ln, cn)]) {
                    ok = false;
                    break;
                  }
                }
              }
              if (ok) mask |= (1ull << u);
            }
            ctrl.moves[idx] = mask;
            next_q[idx] = (mask != 0);
          }
        }
      }
    }
  };

  const int nthreads =
      static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(resolve_workers(workers)),
                                             std::max<std::size_t>(ns, 1)));
  bool changed = true;
  while (changed) {
    ++res.iterations;
    if (nthreads <= 1) {
      sweep_range(0, ns);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (ns + static_cast<std::size_t>(nthreads) - 1) /
                                static_cast<std::size_t>(nthreads);
      for (int t = 0; t < nthreads; ++t) {
        const std::size_t b = static_cast<std::size_t>(t) * chunk;
        const std::size_t e = std::min(ns, b + chunk);
        if (b >= e) break;
        pool.emplace_back(sweep_range, b, e);
      }
      for (auto& th : pool) th.join();
    }
    changed = (next_q != in_q);
    std::swap(in_q, next_q);
  }

  for (std::uint8_t b : in_q) res.final_states += b;
  return res;
}

Controller synthesize_controller(const SymbolicModel& model, const SafetySpec& spec,
                                 int workers) {
  SynthesisResult res = solve_safety_game(model, spec, workers);
  if (res.final_states == 0)
    throw SynthesisInfeasible(
        res.initial_states == 0
            ? "eroded safe set contains no abstract state"
            : "safety game has an empty winning region",
        res.iterations);
  return std::move(res.controller);
}

/* ---- internal input restriction ------------------------------------------ */

SymbolicModel restrict_internal_inputs(const SymbolicModel& model,
                                       const BoxUnion& allowed) {
  validate_box_union(allowed);
  for (const Box& b : allowed.boxes)
    if (static_cast<int>(b.lo.size()) != model.wdim)
      throw InputError("restriction set dimension does not match the internal input");

  std::vector<std::size_t> keep;
  for (std::size_t wi = 0; wi < model.nw(); ++wi)
    if (allowed.contains(model.wpoints[wi], 1e-9)) keep.push_back(wi);

  SymbolicModel out;
  out.eta = model.eta;
  out.varpi = model.varpi;
  out.dim = model.dim;
  out.wdim = model.wdim;
  out.m = model.m;
  out.dwell = model.dwell;
  out.C1 = model.C1;
  out.C2 = model.C2;
  out.w_overridden = true;
  out.grid = model.grid;
  for (std::size_t wi : keep) out.wpoints.push_back(model.wpoints[wi]);

  out.offsets.assign(out.n_cells() + 1, 0);
  std::size_t cell = 0;
  for (std::size_t s = 0; s < model.n_states(); ++s) {
    for (int p = 0; p < model.m; ++p) {
      for (std::size_t wi : keep) {
        const auto span = model.successors(s, p, wi);
        out.targets.insert(out.targets.end(), span.begin(), span.end());
        out.offsets[cell + 1] = out.offsets[cell] + span.size();
        ++cell;
      }
    }
  }
  return out;
}

SymbolicModel restrict_internal_inputs(const SymbolicModel& model,
                                       const BoxUnion& assumed_outputs,
                                       const Mat& M_row_block) {
  validate_box_union(assumed_outputs);
  if (M_row_block.rows != model.wdim ||
      M_row_block.cols != assumed_outputs.dim())
    throw InputError("coupling row block shape does not match the assumption");
  return restrict_internal_inputs(model, linear_image(M_row_block, assumed_outputs));
}

/* ---- refinement ----------------------------------------------------------- */

IVec nearest_cell(const Vec& x, double eta) {
  if (!(eta > 0.0)) throw ParamError("grid parameter must be positive");
  IVec k(x.size());
  for (std::size_t d = 0; d < x.size(); ++d)
    k[d] = static_cast<std::int64_t>(std::ceil(x[d] / eta - 0.5));
  return k;
}

std::uint64_t refine_moves(const Controller& ctrl, const Vec& x, int p, int l, int c) {
  if (static_cast<int>(x.size()) != ctrl.dim)
    throw RefinementError("state dimension does not match the controller");
  const IVec k = nearest_cell(x, ctrl.eta);
  const auto s = ctrl.index_of(k);
  if (!s)
    throw RefinementError("no grid cell relates to the concrete state");
  const std::uint64_t mask = ctrl.mask(*s, p, l, c);
  if (mask == 0)
    throw RefinementError("refined state lies outside the controller domain");
  return mask;
}

/* ---- persistence ----------------------------------------------------------- */

namespace {

constexpr char kMagic[4] = {'S', 'C', 'T', 'L'};
constexpr std::uint16_t kVersion = 1;

using namespace binio;

std::string encode_payload(const Controller& c) {
  std::string pl;
  IVec prev(static_cast<std::size_t>(c.dim), 0);
  for (const IVec& k : c.grid) {
    for (std::size_t d = 0; d < k.size(); ++d)
      put_varint(pl, zigzag(k[d] - prev[d]));
    prev = k;
  }
  for (std::uint64_t v : c.moves) put_varint(pl, v);
  return pl;
}

}  // namespace

std::uint64_t Controller::digest() const { return fnv1a(encode_payload(*this)); }

void save_controller(const Controller& c, const std::string& path) {
  const std::string payload = encode_payload(c);
  std::string head;
  head.append(kMagic, 4);
  put_u16(head, kVersion);
  put_f64(head, c.eta);
  put_u32(head, static_cast<std::uint32_t>(c.dim));
  put_u32(head, static_cast<std::uint32_t>(c.m));
  put_u32(head, static_cast<std::uint32_t>(c.dwell));
  put_u64(head, zigzag(c.fairness_limit));
  put_u32(head, static_cast<std::uint32_t>(c.red_mode));
  put_f64(head, c.shrink);
  put_u64(head, c.model_digest);
  put_u64(head, c.spec_digest);
  put_u64(head, c.grid.size());
  put_u64(head, fnv1a(payload));
  put_u64(head, payload.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

Controller load_controller(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  Reader r(reinterpret_cast<const unsigned char*>(data.data()),
           reinterpret_cast<const unsigned char*>(data.data()) + data.size(),
           "controller file");

  r.need(4);
  if (std::memcmp(r.p, kMagic, 4) != 0) throw FormatError("not a controller file");
  r.p += 4;
  if (r.u16() != kVersion)
    throw FormatError("unsupported controller format version");

  Controller c;
  c.eta = r.f64();
  c.dim = static_cast<int>(r.u32());
  c.m = static_cast<int>(r.u32());
  c.dwell = static_cast<int>(r.u32());
  c.fairness_limit = static_cast<int>(unzigzag(r.u64()));
  c.red_mode = static_cast<int>(r.u32());
  c.shrink = r.f64();
  c.model_digest = r.u64();
  c.spec_digest = r.u64();
  const std::uint64_t ngrid = r.u64();
  const std::uint64_t digest = r.u64();
  const std::uint64_t paysize = r.u64();

  if (c.dim < 0 || c.m <= 0 || c.m > 64 || c.dwell < 1)
    throw FormatError("controller header out of range");
  if (static_cast<std::uint64_t>(r.end - r.p) != paysize)
    throw FormatError("controller payload size mismatch");
  const std::string payload(reinterpret_cast<const char*>(r.p), paysize);
  if (fnv1a(payload) != digest)
    throw FormatError("controller digest mismatch (corrupt file)");

  c.grid.reserve(ngrid);
  IVec prev(static_cast<std::size_t>(c.dim), 0);
  for (std::uint64_t i = 0; i < ngrid; ++i) {
    IVec k(static_cast<std::size_t>(c.dim));
    for (int d = 0; d < c.dim; ++d) {
      prev[static_cast<std::size_t>(d)] += unzigzag(r.varint());
      k[static_cast<std::size_t>(d)] = prev[static_cast<std::size_t>(d)];
    }
    c.grid.push_back(std::move(k));
  }
  const std::size_t total = static_cast<std::size_t>(ngrid) *
                            static_cast<std::size_t>(c.m) *
                            static_cast<std::size_t>(c.dwell) *
                            static_cast<std::size_t>(c.cdim());
  c.moves.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::uint64_t v = r.varint();
    if (c.m < 64 && (v >> c.m) != 0)
      throw FormatError("move mask references a mode out of range");
    c.moves.push_back(v);
  }
  if (r.p != r.end) throw FormatError("trailing bytes in controller file");
  return c;
}

void export_domain_csv(const Controller& c, std::ostream& out) {
  out << "cell";
  for (int d = 0; d < c.dim; ++d) out << ",x" << d;
  out << ",mode,dwell_counter,fair_counter,moves\n";
  char buf[64];
  for (std::size_t s = 0; s < c.n_states(); ++s) {
    for (int p = 0; p < c.m; ++p) {
      for (int l = 0; l < c.dwell; ++l) {
        for (int fc = 0; fc < c.cdim(); ++fc) {
          const std::uint64_t mask = c.moves[c.flat(s, p, l, fc)];
          if (mask == 0) continue;
          out << s;
          for (int d = 0; d < c.dim; ++d) {
            const double v =
                static_cast<double>(c.grid[s][static_cast<std::size_t>(d)]) * c.eta;
            std::snprintf(buf, sizeof buf, "%.9g", v);
            out << ',' << buf;
          }
          out << ',' << p << ',' << l << ',' << fc << ',' << mask << '\n';
        }
      }
    }
  }
}

}  // namespace symnet
