#include "qualpipe/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "qualpipe/errors.hpp"

namespace qualpipe {

namespace {

// Absorbs float noise in 2*|D|*p_j*(1±eps): products that are integers in
// exact arithmetic must round as integers (e.g. 2*100*0.3*0.9 = 54).
constexpr double kRoundGuard = 1e-9;

// Whether any assignment (each row takes 2 distinct columns) can satisfy
// the column bounds. The column sums of such an assignment are exactly the
// degree sequences of loopless multigraphs with n edges: sum = 2n and every
// c_j <= n. So intervals [lower_j, min(upper_j, n)] must be able to sum
// to 2n.
bool bounds_admit_assignment(const std::vector<long long>& lower,
                             const std::vector<long long>& upper,
                             long long n) {
  long long sum_lower = 0;
  long long sum_upper_capped = 0;
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (lower[j] > upper[j] || lower[j] > n) return false;
    sum_lower += lower[j];
    sum_upper_capped += std::min(upper[j], n);
  }
  return sum_lower <= 2 * n && 2 * n <= sum_upper_capped;
}

void check_shapes(const AffinityMatrix& aff, const LpBounds& bounds) {
  if (bounds.lower.size() != aff.cols() || bounds.upper.size() != aff.cols()) {
    throw ShapeMismatchError("bounds cover " +
                             std::to_string(bounds.lower.size()) +
                             " attributes, affinity matrix has " +
                             std::to_string(aff.cols()));
  }
  for (const auto& row : aff.scores) {
    if (row.size() != aff.cols()) {
      throw ShapeMismatchError("ragged affinity matrix");
    }
  }
}

AssignmentMatrix make_result(const AffinityMatrix& aff, const LpBounds& bounds,
                             const std::vector<std::array<int, 2>>& assigned) {
  AssignmentMatrix out;
  out.kind = aff.kind;
  out.instance_ids = aff.instance_ids;
  out.attribute_names = aff.attribute_names;
  out.lower = bounds.lower;
  out.upper = bounds.upper;
  out.epsilon_used = bounds.epsilon;
  long long objective = 0;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    std::vector<std::uint8_t> row(aff.cols(), 0);
    row[static_cast<std::size_t>(assigned[i][0])] = 1;
    row[static_cast<std::size_t>(assigned[i][1])] = 1;
    objective += aff.scores[i][static_cast<std::size_t>(assigned[i][0])];
    objective += aff.scores[i][static_cast<std::size_t>(assigned[i][1])];
    out.assign.push_back(std::move(row));
  }
  out.objective = static_cast<double>(objective);
  return out;
}

}  // namespace

LpBounds compute_bounds(const AttributeSet& priors, std::size_t n_instances,
                        double epsilon) {
  if (priors.size() == 0) {
    throw ConfigError("compute_bounds needs at least one attribute");
  }
  if (epsilon < 0.0 || epsilon >= 1.0) {
    throw ConfigError("epsilon must be in [0, 1)");
  }
  double sum = 0.0;
  for (const auto& a : priors.attributes) {
    if (a.prior < 0.0 || a.prior > 1.0) {
      throw ConfigError("prior outside [0, 1] for \"" + a.name + "\"");
    }
    sum += a.prior;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ConfigError("priors must sum to 1, got " + std::to_string(sum));
  }

  const long long n = static_cast<long long>(n_instances);
  const double total = 2.0 * static_cast<double>(n);
  double eps = epsilon;
  while (true) {
    LpBounds bounds;
    bounds.epsilon = eps;
    for (const auto& a : priors.attributes) {
      const double target = total * a.prior;
      long long lo = static_cast<long long>(
          std::floor(target * (1.0 - eps) + kRoundGuard));
      long long hi = static_cast<long long>(
          std::ceil(target * (1.0 + eps) - kRoundGuard));
      lo = std::max<long long>(lo, 0);
      hi = std::min<long long>(hi, 2 * n);
      bounds.lower.push_back(lo);
      bounds.upper.push_back(hi);
    }
    if (bounds_admit_assignment(bounds.lower, bounds.upper, n)) return bounds;
    if (eps >= 0.99) {
      long long sum_lower = 0;
      long long sum_upper = 0;
      for (std::size_t j = 0; j < bounds.lower.size(); ++j) {
        sum_lower += bounds.lower[j];
        sum_upper += std::min(bounds.upper[j], n);
      }
      throw InfeasibleError(
          "no feasible column bounds even at epsilon 0.99: lower bounds sum "
          "to " +
          std::to_string(sum_lower) + ", achievable upper bounds sum to " +
          std::to_string(sum_upper) + ", assignment total is " +
          std::to_string(2 * n));
    }
    eps = eps == 0.0 ? 0.01 : std::min(0.99, eps * 2.0);
  }
}

AssignmentMatrix solve_assignment(const AffinityMatrix& aff,
                                  const LpBounds& bounds) {
  const std::size_t n = aff.rows();
  const std::size_t cols = aff.cols();
  if (cols < 2) {
    throw ConfigError("assignment needs at least 2 attributes");
  }
  check_shapes(aff, bounds);

  const long long nll = static_cast<long long>(n);
  if (!bounds_admit_assignment(bounds.lower, bounds.upper, nll)) {
    throw InfeasibleError(
        "column bounds admit no assignment of 2 attributes per instance");
  }

  // Greedy start: each row on its 2 highest-scoring columns (ties -> lowest
  // index). This is the optimum with the column bounds ignored, and every
  // possible single move away from it costs >= 0.
  std::vector<std::array<int, 2>> assigned(n);
  std::vector<long long> count(cols, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int a1 = 0;
    for (std::size_t j = 1; j < cols; ++j) {
      if (aff.scores[i][j] > aff.scores[i][static_cast<std::size_t>(a1)]) {
        a1 = static_cast<int>(j);
      }
    }
    int a2 = a1 == 0 ? 1 : 0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (static_cast<int>(j) == a1 || static_cast<int>(j) == a2) continue;
      if (aff.scores[i][j] > aff.scores[i][static_cast<std::size_t>(a2)]) {
        a2 = static_cast<int>(j);
      }
    }
    assigned[i] = {std::min(a1, a2), std::max(a1, a2)};
    ++count[static_cast<std::size_t>(assigned[i][0])];
    ++count[static_cast<std::size_t>(assigned[i][1])];
  }

  // A column cannot be taken twice by one row, so n is a hard cap.
  std::vector<long long> ucap(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    ucap[j] = std::min(bounds.upper[j], nll);
  }

  long long required = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    required += std::max(0LL, count[j] - ucap[j]);
    required += std::max(0LL, bounds.lower[j] - count[j]);
  }
  if (required == 0) return make_result(aff, bounds, assigned);

  // Repair: successive shortest paths on the column exchange graph.
  // Moving row i off column a onto column b costs s_ia - s_ib; rows are
  // aggregated into buckets keyed by (a, b, cost), so the graph has N
  // column nodes regardless of |D|. VT closes the circulation, and the
  // mandatory shed/gain amounts become SS -> TT flow via the standard
  // lower-bound transformation.
  const int VT = static_cast<int>(cols);
  const int SS = VT + 1;
  const int TT = VT + 2;
  const int n_nodes = TT + 1;

  // buckets[a][b][d]: rows currently on a and not on b whose move cost
  // s_ia - s_ib equals d - 4.
  std::vector<std::vector<std::array<std::set<int>, 9>>> buckets(
      cols, std::vector<std::array<std::set<int>, 9>>(cols));
  auto delta = [&](int i, int a, int b) {
    return aff.scores[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] -
           aff.scores[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] +
           4;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (int a : assigned[i]) {
      for (std::size_t b = 0; b < cols; ++b) {
        const int bi = static_cast<int>(b);
        if (bi == assigned[i][0] || bi == assigned[i][1]) continue;
        buckets[static_cast<std::size_t>(a)][b]
               [static_cast<std::size_t>(delta(static_cast<int>(i), a, bi))]
                   .insert(static_cast<int>(i));
      }
    }
  }

  auto apply_move = [&](int i, int a, int b) {
    const int o = assigned[static_cast<std::size_t>(i)][0] == a
                      ? assigned[static_cast<std::size_t>(i)][1]
                      : assigned[static_cast<std::size_t>(i)][0];
    for (std::size_t x = 0; x < cols; ++x) {
      const int xi = static_cast<int>(x);
      if (xi == a || xi == o) continue;
      buckets[static_cast<std::size_t>(a)][x]
             [static_cast<std::size_t>(delta(i, a, xi))]
                 .erase(i);
    }
    buckets[static_cast<std::size_t>(o)][static_cast<std::size_t>(b)]
           [static_cast<std::size_t>(delta(i, o, b))]
               .erase(i);
    assigned[static_cast<std::size_t>(i)] = {std::min(b, o), std::max(b, o)};
    --count[static_cast<std::size_t>(a)];
    ++count[static_cast<std::size_t>(b)];
    for (std::size_t x = 0; x < cols; ++x) {
      const int xi = static_cast<int>(x);
      if (xi == b || xi == o) continue;
      buckets[static_cast<std::size_t>(b)][x]
             [static_cast<std::size_t>(delta(i, b, xi))]
                 .insert(i);
    }
    buckets[static_cast<std::size_t>(o)][static_cast<std::size_t>(a)]
           [static_cast<std::size_t>(delta(i, o, a))]
               .insert(i);
  };

  // Static (zero-cost) arcs with explicit flow bookkeeping. Exchange arcs
  // need none: their residuals appear organically in the recomputed
  // buckets.
  struct StaticArc {
    int from;
    int to;
    long long cap;
    long long flow = 0;
  };
  std::vector<StaticArc> statics;
  long long sum_shed = 0;  // mandatory units over-full columns must shed
  long long sum_gain = 0;  // mandatory units under-full columns must gain
  for (std::size_t j = 0; j < cols; ++j) {
    const int ji = static_cast<int>(j);
    const long long shed_low = std::max(0LL, count[j] - ucap[j]);
    const long long gain_low = std::max(0LL, bounds.lower[j] - count[j]);
    sum_shed += shed_low;
    sum_gain += gain_low;
    // VT -> j carries column j's net shed (lower shed_low), j -> VT its net
    // gain (lower gain_low); caps keep the final count inside [L_j, ucap_j].
    statics.push_back(
        {VT, ji, std::max(0LL, count[j] - bounds.lower[j]) - shed_low});
    statics.push_back({ji, VT, std::max(0LL, ucap[j] - count[j]) - gain_low});
    if (shed_low > 0) statics.push_back({SS, ji, shed_low});
    if (gain_low > 0) statics.push_back({ji, TT, gain_low});
  }
  if (sum_shed > 0) statics.push_back({VT, TT, sum_shed});
  if (sum_gain > 0) statics.push_back({SS, VT, sum_gain});

  struct Edge {
    int from;
    int to;
    long long cap;
    long long cost;
    int static_idx;  // -1 for bucket arcs
    bool backward;   // residual direction of a static arc
    int a, b, d;     // bucket key when static_idx == -1
  };
  constexpr long long kInf = std::numeric_limits<long long>::max() / 4;

  long long pushed = 0;
  while (pushed < required) {
    std::vector<Edge> edges;
    for (std::size_t a = 0; a < cols; ++a) {
      for (std::size_t b = 0; b < cols; ++b) {
        if (a == b) continue;
        for (int d = 0; d < 9; ++d) {
          const auto sz = buckets[a][b][static_cast<std::size_t>(d)].size();
          if (sz == 0) continue;
          edges.push_back({static_cast<int>(a), static_cast<int>(b),
                           static_cast<long long>(sz), d - 4, -1, false,
                           static_cast<int>(a), static_cast<int>(b), d});
        }
      }
    }
    for (std::size_t s = 0; s < statics.size(); ++s) {
      const auto& arc = statics[s];
      if (arc.cap - arc.flow > 0) {
        edges.push_back({arc.from, arc.to, arc.cap - arc.flow, 0,
                         static_cast<int>(s), false, 0, 0, 0});
      }
      if (arc.flow > 0) {
        edges.push_back({arc.to, arc.from, arc.flow, 0, static_cast<int>(s),
                         true, 0, 0, 0});
      }
    }

    // Bellman-Ford: the graph is tiny (N+3 nodes) and, because every
    // augmentation follows a shortest path, never has a negative cycle.
    std::vector<long long> dist(static_cast<std::size_t>(n_nodes), kInf);
    std::vector<int> parent(static_cast<std::size_t>(n_nodes), -1);
    dist[static_cast<std::size_t>(SS)] = 0;
    for (int round = 0;; ++round) {
      if (round > n_nodes + 1) {
        throw Error("internal: negative cycle in exchange graph");
      }
      bool changed = false;
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& ed = edges[e];
        const auto from = static_cast<std::size_t>(ed.from);
        const auto to = static_cast<std::size_t>(ed.to);
        if (dist[from] == kInf) continue;
        if (dist[from] + ed.cost < dist[to]) {
          dist[to] = dist[from] + ed.cost;
          parent[to] = static_cast<int>(e);
          changed = true;
        }
      }
      if (!changed) break;
    }
    if (dist[static_cast<std::size_t>(TT)] == kInf) {
      throw InfeasibleError(
          "column bounds admit no assignment of 2 attributes per instance");
    }

    std::vector<int> path;  // edge indices, TT back to SS
    {
      std::vector<char> seen(static_cast<std::size_t>(n_nodes), 0);
      int v = TT;
      while (v != SS) {
        if (seen[static_cast<std::size_t>(v)] != 0) {
          throw Error("internal: cyclic augmenting path");
        }
        seen[static_cast<std::size_t>(v)] = 1;
        const int e = parent[static_cast<std::size_t>(v)];
        path.push_back(e);
        v = edges[static_cast<std::size_t>(e)].from;
      }
    }
    long long k = required - pushed;
    for (int e : path) k = std::min(k, edges[static_cast<std::size_t>(e)].cap);

    for (int e : path) {
      const auto& ed = edges[static_cast<std::size_t>(e)];
      if (ed.static_idx >= 0) {
        statics[static_cast<std::size_t>(ed.static_idx)].flow +=
            ed.backward ? -k : k;
      } else {
        auto& bucket = buckets[static_cast<std::size_t>(ed.a)]
                              [static_cast<std::size_t>(ed.b)]
                              [static_cast<std::size_t>(ed.d)];
        for (long long t = 0; t < k; ++t) {
          apply_move(*bucket.begin(), ed.a, ed.b);
        }
      }
    }
    pushed += k;
  }

  for (std::size_t j = 0; j < cols; ++j) {
    if (count[j] < bounds.lower[j] || count[j] > ucap[j]) {
      throw Error("internal: repaired column sums violate bounds");
    }
  }
  return make_result(aff, bounds, assigned);
}

AssignmentMatrix brute_force_assignment(const AffinityMatrix& aff,
                                        const LpBounds& bounds) {
  const std::size_t n = aff.rows();
  const std::size_t cols = aff.cols();
  if (cols < 2) {
    throw ConfigError("assignment needs at least 2 attributes");
  }
  check_shapes(aff, bounds);

  const std::size_t n_pairs = cols * (cols - 1) / 2;
  double combos = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    combos *= static_cast<double>(n_pairs);
    if (combos > 1e7) {
      throw TooLargeError("brute force would enumerate over 10^7 matrices");
    }
  }

  std::vector<std::array<int, 2>> pairs;
  for (std::size_t a = 0; a < cols; ++a) {
    for (std::size_t b = a + 1; b < cols; ++b) {
      pairs.push_back({static_cast<int>(a), static_cast<int>(b)});
    }
  }

  // Odometer over per-row pair choices, most significant digit first, so
  // the first maximum found is the lexicographically smallest one.
  std::vector<std::size_t> choice(n, 0);
  std::vector<long long> count(cols, 0);
  long long objective = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ++count[static_cast<std::size_t>(pairs[0][0])];
    ++count[static_cast<std::size_t>(pairs[0][1])];
    objective += aff.scores[i][static_cast<std::size_t>(pairs[0][0])];
    objective += aff.scores[i][static_cast<std::size_t>(pairs[0][1])];
  }

  bool found = false;
  long long best_objective = 0;
  std::vector<std::size_t> best_choice;
  while (true) {
    bool feasible = true;
    for (std::size_t j = 0; j < cols; ++j) {
      if (count[j] < bounds.lower[j] || count[j] > bounds.upper[j]) {
        feasible = false;
        break;
      }
    }
    if (feasible && (!found || objective > best_objective)) {
      found = true;
      best_objective = objective;
      best_choice = choice;
    }
    if (n == 0) break;

    // Advance the odometer, maintaining counts and objective incrementally.
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      const auto& old_pair = pairs[choice[pos]];
      count[static_cast<std::size_t>(old_pair[0])]--;
      count[static_cast<std::size_t>(old_pair[1])]--;
      objective -= aff.scores[pos][static_cast<std::size_t>(old_pair[0])];
      objective -= aff.scores[pos][static_cast<std::size_t>(old_pair[1])];
      choice[pos] = (choice[pos] + 1) % pairs.size();
      const auto& new_pair = pairs[choice[pos]];
      count[static_cast<std::size_t>(new_pair[0])]++;
      count[static_cast<std::size_t>(new_pair[1])]++;
      objective += aff.scores[pos][static_cast<std::size_t>(new_pair[0])];
      objective += aff.scores[pos][static_cast<std::size_t>(new_pair[1])];
      if (choice[pos] != 0) break;
    }
    if (pos == 0 && choice[0] == 0) break;  // odometer wrapped around
  }

  if (!found) {
    throw InfeasibleError("no assignment satisfies the column bounds");
  }
  std::vector<std::array<int, 2>> assigned(n);
  for (std::size_t i = 0; i < n; ++i) assigned[i] = pairs[best_choice[i]];
  return make_result(aff, bounds, assigned);
}

}  // namespace qualpipe
