#include "ousb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "ousb/kernels.hpp"
#include "ousb/rng.hpp"

namespace ousb {

double bw2(const Gaussian& g1, const Gaussian& g2) {
  if (g1.mean.size() != g2.mean.size()) throw std::invalid_argument("bw2: dimension mismatch");
  const double scale1 = std::max(1.0, g1.cov.cwiseAbs().maxCoeff());
  const double scale2 = std::max(1.0, g2.cov.cwiseAbs().maxCoeff());
  if (min_eigenvalue(g1.cov) < -1e-9 * scale1 || min_eigenvalue(g2.cov) < -1e-9 * scale2)
    throw std::invalid_argument("bw2: covariances must be PSD");
  const Matrix root = psd_root_clamped(g1.cov);
  const Vector vals = sym_eig(symmetrize(root * g2.cov * root)).values.cwiseMax(0.0);
  const double cross = vals.cwiseSqrt().sum();
  return (g1.mean - g2.mean).squaredNorm() + g1.cov.trace() + g2.cov.trace() - 2.0 * cross;
}

double energy_distance(const Matrix& x, const Matrix& y) {
  if (x.rows() == 0 || y.rows() == 0) throw std::invalid_argument("energy_distance: empty input");
  if (x.cols() != y.cols()) throw std::invalid_argument("energy_distance: dimension mismatch");
  const double n = static_cast<double>(x.rows());
  const double m = static_cast<double>(y.rows());
  const double cross = cross_norm_sum(x, y) / (n * m);
  const double within_x = cross_norm_sum(x, x) / (n * n);
  const double within_y = cross_norm_sum(y, y) / (m * m);
  return 2.0 * cross - within_x - within_y;
}

namespace {

// Assignment problem on a dense cost matrix (potentials + shortest
// augmenting row), O(n^3). Returns the optimal total cost.
double hungarian_cost(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[j] = row assigned to column j; columns 1-based
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    std::vector<int> way(n + 1, 0);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(match[j] - 1, j - 1);
  return total;
}

// Min-cost max-flow by successive shortest paths with Dijkstra potentials
// (all edge costs are nonnegative, so zero initial potentials are valid).
// Supplies are integers, making the optimum exact.
class MinCostFlow {
 public:
  explicit MinCostFlow(int nodes) : head_(nodes, -1) {}

  void add_edge(int from, int to, int64_t cap, double cost) {
    edges_.push_back({to, head_[from], cap, cost});
    head_[from] = static_cast<int>(edges_.size()) - 1;
    edges_.push_back({from, head_[to], 0, -cost});
    head_[to] = static_cast<int>(edges_.size()) - 1;
  }

  // Returns total cost of the max flow from s to t.
  double solve(int s, int t) {
    const int n = static_cast<int>(head_.size());
    std::vector<double> potential(n, 0.0), dist(n);
    std::vector<int> parent_edge(n);
    double total = 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    while (true) {
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(parent_edge.begin(), parent_edge.end(), -1);
      dist[s] = 0.0;
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      heap.emplace(0.0, s);
      while (!heap.empty()) {
        auto [du, u] = heap.top();
        heap.pop();
        if (du > dist[u] + 1e-15 * (1.0 + std::abs(dist[u]))) continue;
        for (int e = head_[u]; e >= 0; e = edges_[e].next) {
          if (edges_[e].cap <= 0) continue;
          const int v = edges_[e].to;
          const double w = edges_[e].cost + potential[u] - potential[v];
          if (dist[u] + w < dist[v] - 1e-15) {
            dist[v] = dist[u] + w;
            parent_edge[v] = e;
            heap.emplace(dist[v], v);
          }
        }
      }
      if (parent_edge[t] < 0) break;
      for (int v = 0; v < n; ++v)
        if (dist[v] < inf) potential[v] += dist[v];
      int64_t push = std::numeric_limits<int64_t>::max();
      for (int v = t; v != s;) {
        const int e = parent_edge[v];
        push = std::min(push, edges_[e].cap);
        v = edges_[e ^ 1].to;
      }
      for (int v = t; v != s;) {
        const int e = parent_edge[v];
        edges_[e].cap -= push;
        edges_[e ^ 1].cap += push;
        total += static_cast<double>(push) * edges_[e].cost;
        v = edges_[e ^ 1].to;
      }
    }
    return total;
  }

 private:
  struct Edge {
    int to;
    int next;
    int64_t cap;
    double cost;
  };
  std::vector<int> head_;
  std::vector<Edge> edges_;
};

double transport_cost(const Matrix& cost, int64_t supply_per_row, int64_t demand_per_col) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  // Nodes: 0 = source, 1..n rows, n+1..n+m cols, n+m+1 sink.
  MinCostFlow flow(n + m + 2);
  const int sink = n + m + 1;
  for (int i = 0; i < n; ++i) flow.add_edge(0, 1 + i, supply_per_row, 0.0);
  for (int j = 0; j < m; ++j) flow.add_edge(1 + n + j, sink, demand_per_col, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      flow.add_edge(1 + i, 1 + n + j, std::min(supply_per_row, demand_per_col), cost(i, j));
  return flow.solve(0, sink);
}

}  // namespace

MetricReport emd_report(const Matrix& x, const Matrix& y) {
  if (x.rows() == 0 || y.rows() == 0) throw std::invalid_argument("emd: empty input");
  if (x.cols() != y.cols()) throw std::invalid_argument("emd: dimension mismatch");
  const int64_t n = x.rows(), m = y.rows();
  MetricReport report;
  report.name = "emd";
  report.n_x = static_cast<int>(n);
  report.n_y = static_cast<int>(m);

  if (n == 1 && m == 1) {
    report.value = (x.row(0) - y.row(0)).norm();
    return report;
  }
  if (n * m <= 1000000) {
    const Matrix cost = euclid_dist(x, y);
    if (n == m) {
      report.value = hungarian_cost(cost) / static_cast<double>(n);
    } else {
      // Scale uniform weights 1/n, 1/m by n*m: integer supplies m and n.
      report.value = transport_cost(cost, m, n) / static_cast<double>(n * m);
    }
    return report;
  }

  // Entropic fallback above the exactness threshold (eps = 1e-3, no debiasing).
  report.approximate = true;
  const Matrix cost = euclid_dist(x, y);
  const double eps = 1e-3;
  const Matrix neg_scaled = -cost / eps;
  Vector u = Vector::Zero(n), v = Vector::Zero(m), tmp;
  const Vector log_a = Vector::Constant(n, -std::log(static_cast<double>(n)));
  const Vector log_b = Vector::Constant(m, -std::log(static_cast<double>(m)));
  for (int iter = 0; iter < 2000; ++iter) {
    Vector add_v = v + log_b;
    softmin_rows(neg_scaled, add_v, tmp);
    u = tmp;
    Vector add_u = u + log_a;
    softmin_cols(neg_scaled, add_u, tmp);
    v = tmp;
  }
  double value = 0.0;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < m; ++j)
      value += std::exp(u[i] + v[j] + neg_scaled(i, j) + log_a[i] + log_b[j]) * cost(i, j);
  report.value = value;
  return report;
}

double emd(const Matrix& x, const Matrix& y) { return emd_report(x, y).value; }

MetricReport force_error(const TimeVaryingField& f1, const TimeVaryingField& f2,
                         const GaussianPath& law, const std::vector<double>& times, int n_mc,
                         uint64_t seed) {
  if (times.empty() || n_mc < 2) throw std::invalid_argument("force_error: need times and n_mc >= 2");
  MetricReport report;
  report.name = "force_error";
  report.n_x = n_mc;
  double value_acc = 0.0, var_acc = 0.0;
  for (size_t ti = 0; ti < times.size(); ++ti) {
    const double t = times[ti];
    const Gaussian g = law(t);
    Rng rng = Rng::derive(seed, ti);
    const Matrix root = psd_root_clamped(g.cov);
    double mean_sq = 0.0, mean_sq2 = 0.0;
    for (int i = 0; i < n_mc; ++i) {
      const Vector x = g.mean + root * rng.normal_vector(static_cast<int>(g.mean.size()));
      const double sq = (f1(t, x) - f2(t, x)).squaredNorm();
      mean_sq += sq;
      mean_sq2 += sq * sq;
    }
    mean_sq /= n_mc;
    mean_sq2 /= n_mc;
    const double err_t = std::sqrt(std::max(mean_sq, 0.0));
    value_acc += err_t;
    if (err_t > 0.0) {
      const double var_sq = std::max(mean_sq2 - mean_sq * mean_sq, 0.0) / n_mc;
      // Delta method: se(sqrt(m)) = se(m) / (2 sqrt(m)).
      var_acc += var_sq / (4.0 * mean_sq);
    }
  }
  report.value = value_acc / static_cast<double>(times.size());
  report.std_error = std::sqrt(var_acc) / static_cast<double>(times.size());
  return report;
}

Gaussian fit_gaussian(const Matrix& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 2) throw std::invalid_argument("fit_gaussian: need at least 2 samples");
  const Vector mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov += 1e-8 * Matrix::Identity(samples.cols(), samples.cols());
  return Gaussian{mean, symmetrize(cov)};
}

}  // namespace ousb
