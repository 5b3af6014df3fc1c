#include "fatou/delta.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <mutex>

#include "fatou/error.hpp"
#include "fatou/rng.hpp"

namespace fatou {

std::string to_string(DeltaMethod m) {
  return m == DeltaMethod::FourPoint ? "four-point" : "thin-triangle";
}

DeltaMethod parse_delta_method(const std::string& text) {
  if (text == "four-point" || text == "FourPoint") return DeltaMethod::FourPoint;
  if (text == "thin-triangle" || text == "ThinTriangle") return DeltaMethod::ThinTriangle;
  throw InvalidArgument("unknown delta method '" + text + "'");
}

namespace {

using DistanceMatrix = std::vector<std::int16_t>;

DistanceMatrix distance_matrix(const Group& g, const Ball& b, std::size_t budget) {
  const std::size_t n = b.size();
  DistanceMatrix d(n * n, 0);
  std::optional<Ball> wide;
  if (!g.geodesic_normal_form()) wide.emplace(ball(g, 2 * b.radius(), Word{}, budget));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      Word t = g.quotient(b[i], b[j]);
      int dij = wide ? wide->distance(t) : static_cast<int>(t.size());
      d[i * n + j] = d[j * n + i] = static_cast<std::int16_t>(dij);
    }
  }
  return d;
}

// Doubled four-point defect of one quadruple.
inline int four_point_gap(int s1, int s2, int s3) {
  int hi = std::max(s1, std::max(s2, s3));
  int lo = std::min(s1, std::min(s2, s3));
  return hi - (s1 + s2 + s3 - hi - lo);
}

DeltaEstimate four_point(const Group& g, const Ball& b, const DeltaOptions& opt) {
  const std::size_t n = b.size();
  const DistanceMatrix d = distance_matrix(g, b, opt.ball_budget);
  auto D = [&](std::size_t i, std::size_t j) { return static_cast<int>(d[i * n + j]); };

  DeltaEstimate est;
  est.method = DeltaMethod::FourPoint;
  est.radius = b.radius();
  int best = 0;
  std::array<std::size_t, 4> witness{0, 0, 0, 0};
  std::mutex merge;

  const double nd = static_cast<double>(n);
  const double configurations = nd * (nd - 1) * (nd - 2) * (nd - 3) / 24.0;
  if (opt.exhaustive || configurations <= static_cast<double>(opt.enumeration_budget)) {
    parallel_chunks(n, 1, opt.workers, [&](std::size_t i0, std::size_t i1) {
      int local = 0;
      std::array<std::size_t, 4> local_witness{0, 0, 0, 0};
      std::vector<std::int16_t> gap(n);
      for (std::size_t i = i0; i < i1; ++i) {
        const std::int16_t* ri = &d[i * n];
        for (std::size_t j = i + 1; j < n; ++j) {
          const std::int16_t* rj = &d[j * n];
          const std::int16_t dij = ri[j];
          for (std::size_t k = j + 1; k < n; ++k) {
            const std::int16_t* rk = &d[k * n];
            const std::int16_t dik = ri[k], djk = rj[k];
            std::int16_t row_max = 0;
            // Branch-free inner loop so the compiler can vectorize it.
            for (std::size_t l = k + 1; l < n; ++l) {
              std::int16_t s1 = static_cast<std::int16_t>(dij + rk[l]);
              std::int16_t s2 = static_cast<std::int16_t>(dik + rj[l]);
              std::int16_t s3 = static_cast<std::int16_t>(djk + ri[l]);
              std::int16_t hi = std::max(s1, std::max(s2, s3));
              std::int16_t lo = std::min(s1, std::min(s2, s3));
              std::int16_t gp = static_cast<std::int16_t>(2 * hi + lo - s1 - s2 - s3);
              row_max = std::max(row_max, gp);
            }
            if (row_max > local) {
              for (std::size_t l = k + 1; l < n; ++l) {
                if (four_point_gap(dij + rk[l], dik + rj[l], djk + ri[l]) == row_max) {
                  local = row_max;
                  local_witness = {i, j, k, l};
                  break;
                }
              }
            }
          }
        }
      }
      std::lock_guard lock(merge);
      if (local > best || (local == best && local > 0 && local_witness < witness)) {
        best = local;
        witness = local_witness;
      }
    });
    est.sample_count = 0;
  } else {
    const std::uint64_t samples = opt.samples;
    const std::size_t chunk = 4096;
    const std::size_t chunks = (samples + chunk - 1) / chunk;
    std::vector<std::pair<int, std::array<std::size_t, 4>>> per_chunk(chunks, {0, {0, 0, 0, 0}});
    parallel_chunks(chunks, 1, opt.workers, [&](std::size_t c0, std::size_t c1) {
      for (std::size_t c = c0; c < c1; ++c) {
        RngStream rng(opt.seed, c);
        auto& [local, lw] = per_chunk[c];
        std::size_t count = std::min<std::size_t>(chunk, samples - c * chunk);
        for (std::size_t s = 0; s < count; ++s) {
          std::size_t i = rng.below(n), j = rng.below(n), k = rng.below(n), l = rng.below(n);
          int gp = four_point_gap(D(i, j) + D(k, l), D(i, k) + D(j, l), D(i, l) + D(j, k));
          if (gp > local) {
            local = gp;
            lw = {i, j, k, l};
          }
        }
      }
    });
    for (const auto& [v, w] : per_chunk)
      if (v > best) {
        best = v;
        witness = w;
      }
    est.sample_count = samples;
  }
  est.value = HalfInt::from_twice(best);
  for (auto i : witness) est.witness.push_back(b[i]);
  return est;
}

int thinness(const Group& g, const Word& x, const Word& y, const Word& z) {
  const int limit = 256;
  std::array<GeodesicSegment, 3> sides{geodesic(g, y, z, limit), geodesic(g, x, z, limit),
                                       geodesic(g, x, y, limit)};
  int worst = 0;
  for (int s = 0; s < 3; ++s) {
    for (const auto& p : sides[static_cast<std::size_t>(s)].vertices) {
      int nearest = std::numeric_limits<int>::max();
      for (int t = 0; t < 3 && nearest > 0; ++t) {
        if (t == s) continue;
        for (const auto& q : sides[static_cast<std::size_t>(t)].vertices) {
          nearest = std::min(nearest, distance_or_throw(g, p, q, limit));
          if (nearest == 0) break;
        }
      }
      worst = std::max(worst, nearest);
    }
  }
  return worst;
}

DeltaEstimate thin_triangle(const Group& g, const Ball& b, const DeltaOptions& opt) {
  const std::size_t n = b.size();
  DeltaEstimate est;
  est.method = DeltaMethod::ThinTriangle;
  est.radius = b.radius();
  int best = 0;
  std::array<std::size_t, 3> witness{0, 0, 0};
  std::mutex merge;
  const double nd = static_cast<double>(n);
  const double configurations = nd * (nd - 1) * (nd - 2) / 6.0;
  if (opt.exhaustive || configurations <= static_cast<double>(opt.enumeration_budget)) {
    parallel_chunks(n, 1, opt.workers, [&](std::size_t i0, std::size_t i1) {
      int local = 0;
      std::array<std::size_t, 3> lw{0, 0, 0};
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          for (std::size_t k = j + 1; k < n; ++k) {
            int t = thinness(g, b[i], b[j], b[k]);
            if (t > local) {
              local = t;
              lw = {i, j, k};
            }
          }
      std::lock_guard lock(merge);
      if (local > best || (local == best && local > 0 && lw < witness)) {
        best = local;
        witness = lw;
      }
    });
  } else {
    const std::size_t chunk = 1024;
    const std::size_t chunks = (opt.samples + chunk - 1) / chunk;
    std::vector<std::pair<int, std::array<std::size_t, 3>>> per_chunk(chunks, {0, {0, 0, 0}});
    parallel_chunks(chunks, 1, opt.workers, [&](std::size_t c0, std::size_t c1) {
      for (std::size_t c = c0; c < c1; ++c) {
        RngStream rng(opt.seed, c);
        std::size_t count = std::min<std::size_t>(chunk, opt.samples - c * chunk);
        for (std::size_t s = 0; s < count; ++s) {
          std::size_t i = rng.below(n), j = rng.below(n), k = rng.below(n);
          int t = thinness(g, b[i], b[j], b[k]);
          if (t > per_chunk[c].first) per_chunk[c] = {t, {i, j, k}};
        }
      }
    });
    for (const auto& [v, w] : per_chunk)
      if (v > best) {
        best = v;
        witness = w;
      }
    est.sample_count = opt.samples;
  }
  est.value = HalfInt(best);
  for (auto i : witness) est.witness.push_back(b[i]);
  return est;
}

}  // namespace

DeltaEstimate estimate_delta(const Group& g, int radius, const DeltaOptions& options) {
  Ball b = ball(g, radius, Word{}, options.ball_budget);
  if (b.size() < 3) {
    DeltaEstimate est;
    est.method = options.method;
    est.radius = radius;
    return est;
  }
  return options.method == DeltaMethod::FourPoint ? four_point(g, b, options)
                                                  : thin_triangle(g, b, options);
}

}  // namespace fatou
