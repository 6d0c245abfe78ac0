#pragma once

// Distances, clustering and 2D projection over embedding matrices.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "senseloom/embedstore.hpp"
#include "senseloom/error.hpp"
#include "senseloom/random.hpp"

namespace senseloom {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
};

inline Matrix to_matrix(const EmbeddingMatrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t k = 0; k < m.data.size(); ++k) out.values[k] = m.data[k];
  return out;
}

struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // n x n, symmetric, zero diagonal

  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t size) : n(size), values(size * size, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    values[i * n + j] = v;
    values[j * n + i] = v;
  }
};

struct ClusterLabels {
  std::vector<std::size_t> labels;
  std::size_t k = 0;
};

enum class ProjectionMethod { mds, pca };

inline const char* to_string(ProjectionMethod m) { return m == ProjectionMethod::mds ? "mds" : "pca"; }

inline ProjectionMethod parse_projection_method(const std::string& s) {
  if (s == "mds") return ProjectionMethod::mds;
  if (s == "pca") return ProjectionMethod::pca;
  fail(ErrorKind::parameter, "unknown projection method \"" + s + "\" (expected mds or pca)");
}

struct Projection2D {
  std::vector<std::array<double, 2>> points;
  ProjectionMethod method = ProjectionMethod::mds;
  std::vector<std::string> ids;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

// Relabels so that cluster ids appear in order of their smallest member.
inline ClusterLabels compact_labels(const std::vector<std::size_t>& raw) {
  std::vector<std::size_t> seen_raw;
  ClusterLabels out;
  out.labels.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto it = std::find(seen_raw.begin(), seen_raw.end(), raw[i]);
    std::size_t id;
    if (it == seen_raw.end()) {
      id = seen_raw.size();
      seen_raw.push_back(raw[i]);
    } else {
      id = static_cast<std::size_t>(it - seen_raw.begin());
    }
    out.labels[i] = id;
  }
  out.k = seen_raw.size();
  return out;
}

inline void require_nonzero_rows(const Matrix& x, const std::vector<std::string>& ids) {
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (detail::dot(x.row(i), x.row(i)) == 0.0) {
      fail(ErrorKind::validation,
           "zero-norm embedding row " + (i < ids.size() ? ids[i] : std::to_string(i)));
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cosine distance

inline DistanceMatrix pairwise_cosine_distance(const Matrix& x,
                                               const std::vector<std::string>& ids = {}) {
  detail::require_nonzero_rows(x, ids);
  std::vector<double> norms(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) norms[i] = std::sqrt(detail::dot(x.row(i), x.row(i)));
  DistanceMatrix d(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = i + 1; j < x.rows; ++j) {
      const double cos = detail::dot(x.row(i), x.row(j)) / (norms[i] * norms[j]);
      d.set(i, j, std::clamp(1.0 - cos, 0.0, 2.0));
    }
  }
  return d;
}

inline DistanceMatrix pairwise_cosine_distance(const EmbeddingMatrix& m) {
  return pairwise_cosine_distance(to_matrix(m), m.ids);
}

// ---------------------------------------------------------------------------
// k-means

struct KMeansOptions {
  std::size_t k = 2;
  std::uint64_t seed = 42;
  std::size_t max_iter = 100;
  double tol = 1e-6;
  std::size_t restarts = 1;  // best of this many seeded runs
};

struct KMeansResult {
  ClusterLabels labels;
  Matrix centers;
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::vector<double> inertia_history;  // after each assignment step
};

namespace detail {

inline std::vector<std::size_t> kmeanspp_seed(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows;
  std::vector<std::size_t> chosen{static_cast<std::size_t>(uniform_index(rng, n))};
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), x.row(chosen[0]));
  while (chosen.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = uniform_unit(rng) * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        cum += d2[i];
        if (cum > r) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // rounding at the tail
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) free.push_back(i);
      }
      pick = free[static_cast<std::size_t>(uniform_index(rng, free.size()))];
    }
    chosen.push_back(pick);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(pick)));
    }
  }
  return chosen;
}

inline KMeansResult lloyd(const Matrix& x, const KMeansOptions& opt, std::uint64_t seed) {
  const std::size_t n = x.rows, d = x.cols, k = opt.k;
  Rng rng(seed);
  KMeansResult res;
  res.centers = Matrix(k, d);
  {
    const auto init = kmeanspp_seed(x, k, rng);
    for (std::size_t c = 0; c < k; ++c) {
      std::copy(x.row(init[c]).begin(), x.row(init[c]).end(), res.centers.row(c).begin());
    }
  }
  std::vector<std::size_t> assign(n, 0);
  std::vector<double> cost(n, 0.0);
  bool settled = false;
  for (std::size_t iter = 0;; ++iter) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = squared_distance(x.row(i), res.centers.row(c));
        if (dist < best) {
          best = dist;
          arg = c;
        }
      }
      assign[i] = arg;
      cost[i] = best;
      inertia += best;
    }
    res.inertia = inertia;
    res.inertia_history.push_back(inertia);
    res.iterations = iter;
    if (settled || iter >= opt.max_iter) break;

    Matrix next(k, d);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[assign[i]];
      auto dst = next.row(assign[i]);
      for (std::size_t j = 0; j < d; ++j) dst[j] += x(i, j);
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) next(c, j) /= static_cast<double>(count[c]);
        continue;
      }
      // Empty cluster: move its center onto the worst-served point.
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (far == n || cost[i] > cost[far]) far = i;
      }
      taken[far] = true;
      std::copy(x.row(far).begin(), x.row(far).end(), next.row(c).begin());
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      shift = std::max(shift, std::sqrt(squared_distance(next.row(c), res.centers.row(c))));
    }
    res.centers = std::move(next);
    settled = shift < opt.tol;
  }
  res.labels.labels = assign;
  res.labels.k = k;
  return res;
}

}  // namespace detail

// Lloyd iterations from k-means++ seeding on the rows of `x` as given.
inline KMeansResult kmeans_rows(const Matrix& x, const KMeansOptions& opt) {
  if (opt.k < 1 || opt.k > x.rows) {
    fail(ErrorKind::parameter,
         "k = " + std::to_string(opt.k) + " out of range [1, " + std::to_string(x.rows) + "]");
  }
  if (opt.restarts < 1) fail(ErrorKind::parameter, "restarts must be >= 1");
  KMeansResult best;
  for (std::size_t r = 0; r < opt.restarts; ++r) {
    const std::uint64_t seed = r == 0 ? opt.seed : derive_seed(opt.seed, r);
    auto res = detail::lloyd(x, opt, seed);
    if (r == 0 || res.inertia < best.inertia) best = std::move(res);
  }
  best.labels = detail::compact_labels(best.labels.labels);
  return best;
}

// Spherical k-means: rows are L2-normalized first.
inline KMeansResult kmeans(const Matrix& x, const KMeansOptions& opt,
                           const std::vector<std::string>& ids = {}) {
  detail::require_nonzero_rows(x, ids);
  Matrix u = x;
  for (std::size_t i = 0; i < u.rows; ++i) {
    auto r = u.row(i);
    const double norm = std::sqrt(detail::dot(r, r));
    for (auto& v : r) v /= norm;
  }
  return kmeans_rows(u, opt);
}

inline KMeansResult kmeans(const EmbeddingMatrix& m, const KMeansOptions& opt) {
  if (opt.k < 1 || opt.k > m.rows()) {
    fail(ErrorKind::parameter,
         "k = " + std::to_string(opt.k) + " out of range [1, " + std::to_string(m.rows()) + "]");
  }
  return kmeans(to_matrix(m), opt, m.ids);
}

// ---------------------------------------------------------------------------
// Average-linkage agglomerative clustering

// Clusters are keyed by their smallest member index; at each step the pair
// with the lowest mean inter-cluster distance merges, ties going to the
// lexicographically smallest key pair.
inline ClusterLabels agglomerative(const DistanceMatrix& d, std::size_t k) {
  const std::size_t n = d.n;
  if (k < 1 || k > n) {
    fail(ErrorKind::parameter,
         "k = " + std::to_string(k) + " out of range [1, " + std::to_string(n) + "]");
  }
  std::vector<double> sum = d.values;  // sum of cross distances between clusters
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> owner(n);
  std::iota(owner.begin(), owner.end(), 0);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);

  while (active.size() > k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t x = 0; x < active.size(); ++x) {
      const std::size_t a = active[x];
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const std::size_t b = active[y];
        const double avg = sum[a * n + b] / static_cast<double>(size[a] * size[b]);
        if (avg < best) {
          best = avg;
          ba = a;
          bb = b;
        }
      }
    }
    for (std::size_t c : active) {
      if (c == ba || c == bb) continue;
      const double s = sum[ba * n + c] + sum[bb * n + c];
      sum[ba * n + c] = s;
      sum[c * n + ba] = s;
    }
    size[ba] += size[bb];
    for (auto& o : owner) {
      if (o == bb) o = ba;
    }
    active.erase(std::find(active.begin(), active.end(), bb));
  }
  return detail::compact_labels(owner);
}

// ---------------------------------------------------------------------------
// Top-2 symmetric eigenpairs

struct EigenPairs2 {
  std::array<double, 2> values{};                 // descending
  std::array<std::vector<double>, 2> vectors;     // unit length
  std::size_t iterations = 0;
  double residual = 0.0;
};

namespace detail {

inline std::vector<double> matvec(const Matrix& a, std::span<const double> v) {
  std::vector<double> out(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) out[i] = dot(a.row(i), v);
  return out;
}

inline double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

// Dominant-magnitude eigenvalue by power iteration (Rayleigh quotient).
inline double power_rayleigh(const Matrix& a, std::size_t max_iter, double shift, Rng& rng) {
  const std::size_t n = a.rows;
  std::vector<double> v(n);
  for (auto& x : v) x = uniform_unit(rng) - 0.5;
  double nv = norm2(v);
  for (auto& x : v) x /= nv;
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    // shift != 0 iterates on (shift*I - A) instead of A.
    auto w = matvec(a, v);
    if (shift != 0.0) {
      for (std::size_t i = 0; i < n; ++i) w[i] = shift * v[i] - w[i];
    }
    const double next = dot(v, w);
    const double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (it > 0 && std::abs(next - lambda) <= 1e-12 * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
  }
  return lambda;
}

}  // namespace detail

namespace detail {

// Cyclic Jacobi on a small dense symmetric matrix. Returns eigenvalues and
// column eigenvectors sorted by descending eigenvalue.
inline void jacobi_eigen(std::vector<double> h, std::size_t p, std::vector<double>& values,
                         std::vector<double>& vectors) {
  vectors.assign(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) vectors[i * p + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      diag += h[i * p + i] * h[i * p + i];
      for (std::size_t j = i + 1; j < p; ++j) off += h[i * p + j] * h[i * p + j];
    }
    if (off <= 1e-30 * std::max(diag, 1e-300)) break;
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = r + 1; c < p; ++c) {
        const double hrc = h[r * p + c];
        if (hrc == 0.0) continue;
        const double theta = (h[c * p + c] - h[r * p + r]) / (2.0 * hrc);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0), sn = t * cs;
        for (std::size_t k = 0; k < p; ++k) {
          const double a = h[k * p + r], b = h[k * p + c];
          h[k * p + r] = cs * a - sn * b;
          h[k * p + c] = sn * a + cs * b;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double a = h[r * p + k], b = h[c * p + k];
          h[r * p + k] = cs * a - sn * b;
          h[c * p + k] = sn * a + cs * b;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double a = vectors[k * p + r], b = vectors[k * p + c];
          vectors[k * p + r] = cs * a - sn * b;
          vectors[k * p + c] = sn * a + cs * b;
        }
      }
    }
  }
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return h[a * p + a] > h[b * p + b]; });
  values.assign(p, 0.0);
  std::vector<double> sorted(p * p);
  for (std::size_t c = 0; c < p; ++c) {
    values[c] = h[order[c] * p + order[c]];
    for (std::size_t k = 0; k < p; ++k) sorted[k * p + c] = vectors[k * p + order[c]];
  }
  vectors = std::move(sorted);
}

}  // namespace detail

// Two algebraically largest eigenpairs of a symmetric matrix. Subspace
// iteration on a block of up to eight columns with Rayleigh-Ritz after every
// sweep; the matrix is shifted when negative eigenvalues would otherwise
// dominate. Stops after `max_iter` sweeps or once both top residuals fall
// below `tol` (relative to the matrix scale).
inline EigenPairs2 top2_symmetric(const Matrix& a, std::size_t max_iter = 5000,
                                  double tol = 1e-11) {
  using detail::dot;
  using detail::matvec;
  using detail::norm2;
  const std::size_t n = a.rows;
  EigenPairs2 out;
  if (n == 0) return out;
  Rng rng(0x5E1E5EEDull);

  double scale = 0.0;
  for (double v : a.values) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) {
    for (std::size_t c = 0; c < 2; ++c) {
      out.vectors[c].assign(n, 0.0);
      if (c < n) out.vectors[c][c] = 1.0;
    }
    return out;
  }

  // Estimate the most negative eigenvalue to decide on a shift.
  double shift = 0.0;
  {
    const double mu = detail::power_rayleigh(a, max_iter, 0.0, rng);
    double lambda_min = mu;
    if (mu > 0.0) lambda_min = mu - detail::power_rayleigh(a, max_iter, mu, rng);
    if (lambda_min < -1e-12 * scale) shift = -lambda_min * 1.05;
  }

  const std::size_t p = std::min<std::size_t>(8, n);
  const std::size_t top = std::min<std::size_t>(2, n);
  std::vector<std::vector<double>> v(p, std::vector<double>(n));
  for (auto& col : v) {
    for (auto& x : col) x = uniform_unit(rng) - 0.5;
  }
  // Modified Gram-Schmidt, twice; a collapsed column is replaced by a unit
  // vector orthogonal to the rest.
  auto orthonormalize = [&](std::vector<std::vector<double>>& w) {
    for (std::size_t c = 0; c < p; ++c) {
      const double before = norm2(w[c]);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t q = 0; q < c; ++q) {
          const double proj = dot(w[c], w[q]);
          for (std::size_t i = 0; i < n; ++i) w[c][i] -= proj * w[q][i];
        }
      }
      double nw = norm2(w[c]);
      double floor = 1e-10 * before;
      for (std::size_t e = 0; !(nw > floor) && e < n; ++e) {
        floor = 1e-3;
        w[c].assign(n, 0.0);
        w[c][(c + e) % n] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
          for (std::size_t q = 0; q < c; ++q) {
            const double proj = dot(w[c], w[q]);
            for (std::size_t i = 0; i < n; ++i) w[c][i] -= proj * w[q][i];
          }
        }
        nw = norm2(w[c]);
      }
      for (auto& x : w[c]) x /= nw;
    }
  };
  orthonormalize(v);

  std::vector<std::vector<double>> av(p);
  std::vector<double> ritz, rot;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    for (std::size_t c = 0; c < p; ++c) {
      auto w = matvec(a, v[c]);
      for (std::size_t i = 0; i < n; ++i) w[i] += shift * v[c][i];
      v[c] = std::move(w);
    }
    orthonormalize(v);

    // Rayleigh-Ritz on span(v).
    for (std::size_t c = 0; c < p; ++c) av[c] = matvec(a, v[c]);
    std::vector<double> h(p * p);
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = r; c < p; ++c) {
        const double x = 0.5 * (dot(v[r], av[c]) + dot(v[c], av[r]));
        h[r * p + c] = h[c * p + r] = x;
      }
    }
    detail::jacobi_eigen(std::move(h), p, ritz, rot);
    std::vector<std::vector<double>> nv(p, std::vector<double>(n, 0.0)), nav = nv;
    for (std::size_t c = 0; c < p; ++c) {
      for (std::size_t k = 0; k < p; ++k) {
        const double f = rot[k * p + c];
        if (f == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
          nv[c][i] += f * v[k][i];
          nav[c][i] += f * av[k][i];
        }
      }
    }
    v = std::move(nv);
    av = std::move(nav);

    double res = 0.0;
    for (std::size_t c = 0; c < top; ++c) {
      out.values[c] = ritz[c];
      double r2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = av[c][i] - ritz[c] * v[c][i];
        r2 += r * r;
      }
      res = std::max(res, std::sqrt(r2));
    }
    out.iterations = it;
    out.residual = res;
    if (res < tol * std::max(1.0, scale)) break;
  }
  for (std::size_t c = 0; c < 2; ++c) {
    if (c < top) {
      out.vectors[c] = v[c];
    } else {
      out.values[c] = 0.0;
      out.vectors[c].assign(n, 0.0);
    }
  }
  return out;
}

namespace detail {

// Makes the first non-negligible coordinate of each axis positive.
inline void fix_signs(std::vector<std::array<double, 2>>& pts) {
  for (std::size_t axis = 0; axis < 2; ++axis) {
    double scale = 0.0;
    for (const auto& p : pts) scale = std::max(scale, std::abs(p[axis]));
    for (const auto& p : pts) {
      if (std::abs(p[axis]) > 1e-12 * scale && scale > 0.0) {
        if (p[axis] < 0.0) {
          for (auto& q : pts) q[axis] = -q[axis];
        }
        break;
      }
    }
    for (auto& q : pts) {
      if (q[axis] == 0.0) q[axis] = 0.0;  // drop negative zeros
    }
  }
}

inline void center(std::vector<std::array<double, 2>>& pts) {
  if (pts.empty()) return;
  for (std::size_t axis = 0; axis < 2; ++axis) {
    double mean = 0.0;
    for (const auto& p : pts) mean += p[axis];
    mean /= static_cast<double>(pts.size());
    for (auto& p : pts) p[axis] -= mean;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Classical MDS

inline Projection2D classical_mds(const DistanceMatrix& d) {
  const std::size_t n = d.n;
  if (n < 3) fail(ErrorKind::parameter, "classical MDS needs n >= 3, got " + std::to_string(n));
  Matrix b(n, n);
  std::vector<double> row_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double sq = d(i, j) * d(i, j);
      b(i, j) = sq;
      row_mean[i] += sq;
    }
    grand += row_mean[i];
    row_mean[i] /= static_cast<double>(n);
  }
  grand /= static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      b(i, j) = -0.5 * (b(i, j) - row_mean[i] - row_mean[j] + grand);
    }
  }
  const auto eig = top2_symmetric(b);
  Projection2D p;
  p.method = ProjectionMethod::mds;
  p.points.resize(n);
  for (std::size_t c = 0; c < 2; ++c) {
    const double s = std::sqrt(std::max(eig.values[c], 0.0));
    for (std::size_t i = 0; i < n; ++i) p.points[i][c] = eig.vectors[c][i] * s;
  }
  detail::center(p.points);
  detail::fix_signs(p.points);
  return p;
}

// ---------------------------------------------------------------------------
// PCA

inline Projection2D pca2(const Matrix& x) {
  const std::size_t n = x.rows, d = x.cols;
  if (n < 3) fail(ErrorKind::parameter, "PCA needs n >= 3, got " + std::to_string(n));
  Matrix xc = x;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += xc(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) xc(i, j) -= mean;
  }
  Projection2D p;
  p.method = ProjectionMethod::pca;
  p.points.assign(n, {0.0, 0.0});
  if (d <= n) {
    Matrix cov(d, d);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += xc(i, a) * xc(i, b);
        s /= static_cast<double>(n);
        cov(a, b) = s;
        cov(b, a) = s;
      }
    }
    const auto eig = top2_symmetric(cov);
    for (std::size_t c = 0; c < std::min<std::size_t>(2, d); ++c) {
      if (eig.values[c] <= 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) p.points[i][c] = detail::dot(xc.row(i), eig.vectors[c]);
    }
  } else {
    // Gram route when the dimension exceeds the sample count.
    Matrix gram(n, n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a; b < n; ++b) {
        const double s = detail::dot(xc.row(a), xc.row(b));
        gram(a, b) = s;
        gram(b, a) = s;
      }
    }
    const auto eig = top2_symmetric(gram);
    for (std::size_t c = 0; c < 2; ++c) {
      const double s = std::sqrt(std::max(eig.values[c], 0.0));
      for (std::size_t i = 0; i < n; ++i) p.points[i][c] = eig.vectors[c][i] * s;
    }
  }
  detail::center(p.points);
  detail::fix_signs(p.points);
  return p;
}

inline Projection2D pca2(const EmbeddingMatrix& m) {
  auto p = pca2(to_matrix(m));
  p.ids = m.ids;
  return p;
}

inline Projection2D project(const EmbeddingMatrix& m, ProjectionMethod method) {
  if (m.rows() < 3) {
    fail(ErrorKind::parameter, "projection needs n >= 3, got " + std::to_string(m.rows()));
  }
  Projection2D p = method == ProjectionMethod::mds ? classical_mds(pairwise_cosine_distance(m))
                                                   : pca2(to_matrix(m));
  p.ids = m.ids;
  return p;
}

// ---------------------------------------------------------------------------
// Dispersion-prioritized suggestion

// Farthest-point sampling over the 2D view. Starts from the point farthest
// from the centroid; the seed only matters when every point coincides.
inline std::vector<std::size_t> suggest_dispersed(const Projection2D& p, std::size_t m,
                                                  std::uint64_t seed) {
  const std::size_t n = p.points.size();
  if (m < 1 || m > n) {
    fail(ErrorKind::parameter,
         "m = " + std::to_string(m) + " out of range [1, " + std::to_string(n) + "]");
  }
  auto dist = [](const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
  };
  std::array<double, 2> centroid{0.0, 0.0};
  for (const auto& q : p.points) {
    centroid[0] += q[0];
    centroid[1] += q[1];
  }
  centroid[0] /= static_cast<double>(n);
  centroid[1] /= static_cast<double>(n);

  const bool all_same = std::all_of(p.points.begin(), p.points.end(),
                                    [&](const auto& q) { return q == p.points[0]; });
  if (all_same) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    shuffle(idx, rng);
    idx.resize(m);
    return idx;
  }

  std::size_t first = 0;
  double far = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dc = dist(p.points[i], centroid);
    if (dc > far) {
      far = dc;
      first = i;
    }
  }
  std::vector<std::size_t> picked{first};
  std::vector<bool> used(n, false);
  used[first] = true;
  std::vector<double> mind(n);
  for (std::size_t i = 0; i < n; ++i) mind[i] = dist(p.points[i], p.points[first]);
  while (picked.size() < m) {
    std::size_t arg = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      if (arg == n || mind[i] > mind[arg]) arg = i;
    }
    picked.push_back(arg);
    used[arg] = true;
    for (std::size_t i = 0; i < n; ++i) mind[i] = std::min(mind[i], dist(p.points[i], p.points[arg]));
  }
  return picked;
}

}  // namespace senseloom
