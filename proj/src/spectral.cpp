#include "topo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace topo {

using nlohmann::json;

json FlowResult::to_json() const {
  json cs = json::array();
  for (const auto& c : crossings) cs.push_back({{"t", c.t}, {"direction", c.direction}});
  return {{"net", net}, {"up", up}, {"down", down}, {"crossings", cs}, {"evaluations", evaluations}};
}

namespace {

struct FlowWalker {
  const SpectralPath& path;
  double level;
  FlowResult res;
  static constexpr int kMaxDepth = 20;
  static constexpr long kBudget = 2000000;

  struct Sample {
    double t;
    CMatrix h;
    RVector e;
  };

  Sample eval(double t) {
    if (++res.evaluations > kBudget)
      numerical_error("RefinementLimit", "spectral path too wild for adaptive refinement", {{"t", t}});
    Sample s{t, path.at(t), {}};
    s.e = eigh(s.h).values;
    return s;
  }

  int below(const RVector& e) const { return int((e.array() < level).count()); }

  void interval(const Sample& a, const Sample& b, int depth) {
    const int na = below(a.e), nb = below(b.e);
    const double delta = (b.h - a.h).norm();
    bool near = false;
    for (Eigen::Index i = 0; i < a.e.size(); ++i)
      near |= std::abs(a.e[i] - level) <= delta || std::abs(b.e[i] - level) <= delta;
    if (na == nb && !near) return;
    if (depth >= kMaxDepth || b.t - a.t <= 1e-6) {
      // Equal counts here are a tangential touch and are dropped.
      if (na != nb) {
        int dir = na > nb ? 1 : -1;
        for (int c = 0; c < std::abs(na - nb); ++c) res.crossings.push_back({0.5 * (a.t + b.t), dir});
      }
      return;
    }
    Sample m = eval(0.5 * (a.t + b.t));
    interval(a, m, depth + 1);
    interval(m, b, depth + 1);
  }
};

}  // namespace

FlowResult spectral_flow(const SpectralPath& path, double level) {
  if (path.samples < 2) validation_error("InvalidInput", "spectral path needs at least 2 samples");
  FlowWalker w{path, level, {}};
  std::vector<FlowWalker::Sample> s;
  for (int i = 0; i <= path.samples; ++i) s.push_back(w.eval(double(i) / path.samples));
  auto gapped = [&](const FlowWalker::Sample& x) {
    return (x.e.array() - level).abs().minCoeff() > 1e-9;
  };
  if (!gapped(s.front()) || !gapped(s.back()))
    validation_error("EndpointGapless", "path endpoint has an eigenvalue at the level");
  if (path.closed) {
    for (const auto& x : s)
      if (!gapped(x)) validation_error("EndpointGapless", "loop sample has an eigenvalue at the level", {{"t", x.t}});
  }
  for (std::size_t i = 0; i + 1 < s.size(); ++i) w.interval(s[i], s[i + 1], 0);
  for (const auto& c : w.res.crossings) (c.direction > 0 ? w.res.up : w.res.down)++;
  w.res.net = w.res.up - w.res.down;
  return w.res;
}

CMatrix effective_hamiltonian(const BlochFamily& model, const KVec& k) {
  if (!model.time_reversal) validation_error("NoTimeReversal", "effective Hamiltonian needs time reversal");
  const int n = model.bands;
  CMatrix h = model.evaluate(k);
  CMatrix out = CMatrix::Zero(2 * n, 2 * n);
  out.topRightCorner(n, n) = model.time_reversal->conjugate(h);
  out.bottomLeftCorner(n, n) = h;
  return out;
}

json EdgeCrossings::to_json() const {
  return {{"left", left}, {"right", right}, {"parity", parity}, {"level", level}, {"bulk_gap", bulk_gap},
          {"positions", positions}};
}

namespace {

struct EdgeSample {
  double s;
  CMatrix h;
  RVector e;
  CMatrix v;
  RVector wl, wr;  // weight on the left / right outer quarter
};

class EdgeWalker {
 public:
  EdgeWalker(const RibbonFamily& rb, const KVec& from, const KVec& to) : rb_(rb), from_(from), to_(to) {
    quarter_ = std::max(1, rb.width / 4) * rb.block;
    dim_ = rb.width * rb.block;
    cluster_tol_ = std::max(1e-9, 1e-4 * rb.bulk_gap);
  }

  EdgeSample eval(double s) const {
    EdgeSample x;
    x.s = s;
    x.h = rb_.evaluate(from_ + s * (to_ - from_));
    EigenSystem es = eigh(x.h);
    x.e = es.values;
    x.v = es.vectors;
    // Inside near-degenerate clusters pick the basis that diagonalizes the left-edge weight,
    // so left and right states at equal energy are not mixed arbitrarily. The tolerance
    // covers the tiny splitting from tunnelling between the two edges.
    x.v = separate_edges(x.e, x.v, cluster_tol_);
    x.wl = x.v.topRows(quarter_).colwise().squaredNorm().transpose();
    x.wr = x.v.bottomRows(quarter_).colwise().squaredNorm().transpose();
    return x;
  }

  CMatrix separate_edges(const RVector& e, CMatrix v, double tol) const {
    const Eigen::Index n = e.size();
    for (Eigen::Index i = 0; i < n;) {
      Eigen::Index j = i + 1;
      while (j < n && e[j] - e[j - 1] < tol) ++j;
      if (j - i > 1) {
        CMatrix blk = v.middleCols(i, j - i);
        CMatrix top = blk.topRows(quarter_);
        CMatrix bot = blk.bottomRows(quarter_);
        CMatrix op = top.adjoint() * top - bot.adjoint() * bot;
        Eigen::SelfAdjointEigenSolver<CMatrix> ls(op);
        v.middleCols(i, j - i) = blk * ls.eigenvectors();
      }
      i = j;
    }
    return v;
  }

  // Largest single-edge weight of each state after undoing hybridizations narrower than tol.
  RVector edge_weight(const EdgeSample& x, double tol) const {
    CMatrix v = separate_edges(x.e, x.v, tol);
    RVector wl = v.topRows(quarter_).colwise().squaredNorm().transpose();
    RVector wr = v.bottomRows(quarter_).colwise().squaredNorm().transpose();
    return wl.cwiseMax(wr);
  }

  void run(const EdgeSample& a, const EdgeSample& b, double level, EdgeCrossings& out, int depth) const {
    // Weyl: no eigenvalue moves by more than ||dH||_2 <= sqrt(||dH||_1 ||dH||_inf).
    const CMatrix dh = b.h - a.h;
    const double delta = std::sqrt(dh.cwiseAbs().colwise().sum().maxCoeff() * dh.cwiseAbs().rowwise().sum().maxCoeff());
    auto near = [&](const EdgeSample& x) {
      std::vector<std::vector<Eigen::Index>> c;
      for (Eigen::Index i = 0; i < x.e.size(); ++i) {
        if (std::abs(x.e[i] - level) > delta) continue;
        if (!c.empty() && x.e[i] - x.e[c.back().back()] < cluster_tol_) c.back().push_back(i);
        else c.push_back({i});
      }
      return c;
    };
    const auto ca = near(a), cb = near(b);
    const int na = int((a.e.array() < level).count()), nb = int((b.e.array() < level).count());
    if (ca.empty() && cb.empty()) return;
    if (depth < 14 && (ca.size() > 1 || cb.size() > 1 || na != nb) && b.s - a.s > 1e-9) {
      EdgeSample m = eval(0.5 * (a.s + b.s));
      run(a, m, level, out, depth + 1);
      run(m, b, level, out, depth + 1);
      return;
    }
    // Match degenerate clusters across the interval by subspace overlap, then states inside a
    // matched pair of clusters by eigenvector overlap.
    std::vector<bool> used(cb.size(), false);
    int net = 0;
    for (const auto& A : ca) {
      double best = -1.0;
      std::size_t bj = 0;
      for (std::size_t j = 0; j < cb.size(); ++j) {
        if (used[j] || cb[j].size() != A.size()) continue;
        double o = 0.0;
        for (Eigen::Index i : A)
          for (Eigen::Index k : cb[j]) o += std::norm(a.v.col(i).dot(b.v.col(k)));
        o /= double(A.size());
        if (o > best) best = o, bj = j;
      }
      if (best < 0.5) continue;
      used[bj] = true;
      const auto& B = cb[bj];
      bool below_a = a.e[A.front()] < level, below_b = b.e[B.front()] < level;
      if (below_a == below_b) continue;
      net += int(A.size()) * (below_a ? 1 : -1);
      std::vector<bool> taken(B.size(), false);
      for (Eigen::Index i : A) {
        double bo = -1.0;
        std::size_t bk = 0;
        for (std::size_t k = 0; k < B.size(); ++k) {
          if (taken[k]) continue;
          double o = std::norm(a.v.col(i).dot(b.v.col(B[k])));
          if (o > bo) bo = o, bk = k;
        }
        taken[bk] = true;
        double wl = 0.5 * (a.wl[i] + b.wl[B[bk]]), wr = 0.5 * (a.wr[i] + b.wr[B[bk]]);
        if (wl > 0.6) {
          ++out.left;
          out.positions.push_back(0.5 * (a.s + b.s));
        } else if (wr > 0.6) {
          ++out.right;
        } else {
          numerical_error("EdgeBandIsolationFailed", "a state crossing the level is not localized on either edge",
                          {{"s", 0.5 * (a.s + b.s)}, {"left_weight", wl}, {"right_weight", wr}});
        }
      }
    }
    if (net != na - nb)
      numerical_error("EdgeBandIsolationFailed", "could not follow the states crossing the level",
                      {{"s", 0.5 * (a.s + b.s)}, {"expected", na - nb}, {"matched", net}});
  }

 private:
  const RibbonFamily& rb_;
  KVec from_, to_;
  Eigen::Index quarter_ = 0, dim_ = 0;
  double cluster_tol_ = 1e-9;
};

}  // namespace

EdgeCrossings edge_crossings(const RibbonFamily& ribbon, const KVec& from, const KVec& to) {
  EdgeCrossings out;
  out.bulk_gap = ribbon.bulk_gap;
  if (!(ribbon.bulk_gap > 1e-6))
    numerical_error("EdgeBandIsolationFailed", "bulk spectrum is gapless; edge bands cannot be isolated",
                    {{"bulk_gap", ribbon.bulk_gap}});
  EdgeWalker w(ribbon, from, to);
  const int samples = 128;
  std::vector<EdgeSample> s;
  for (int i = 0; i <= samples; ++i) s.push_back(w.eval(double(i) / samples));

  // Deep inside the gap only edge states may live. A state spread over both edges means the
  // ribbon is too narrow for the decay length and the crossings may be gapped out. Tunnelling
  // splittings far below the probe levels are undone first, since they cannot move a crossing.
  const double gap0 = ribbon.bulk_gap;
  for (const auto& x : s) {
    RVector wt = w.edge_weight(x, 0.02 * gap0);
    for (Eigen::Index i = 0; i < x.e.size(); ++i)
      if (std::abs(x.e[i]) < 0.5 * gap0 && wt[i] <= 0.6)
        numerical_error("EdgeBandIsolationFailed", "in-gap state is not localized on an edge; ribbon too narrow",
                        {{"s", x.s}, {"energy", x.e[i]}, {"edge_weight", wt[i]}});
  }

  // Levels inside the bulk gap that stay clear of the eigenvalues at the path ends, where
  // Kramers pairs sit. Zero is avoided on purpose: in mirror-symmetric ribbons the two edge
  // branches meet there and finite-width tunnelling gaps out the crossing.
  const double gap = ribbon.bulk_gap;
  std::vector<double> levels;
  for (double f : {0.1, -0.1, 0.15, -0.15, 0.2, -0.2, 0.05, -0.05, 0.25, -0.25}) {
    double e = f * gap;
    double dist = std::min((s.front().e.array() - e).abs().minCoeff(), (s.back().e.array() - e).abs().minCoeff());
    if (dist > 0.02 * gap) levels.push_back(e);
    if (levels.size() == 2) break;
  }
  if (levels.size() < 2) numerical_error("EdgeBandIsolationFailed", "no level in the bulk gap avoids the endpoint spectrum");
  // The crossing parity must not depend on where in the gap we look.
  EdgeCrossings second;
  for (int i = 0; i < samples; ++i) w.run(s[i], s[i + 1], levels[1], second, 0);
  out.level = levels[0];
  for (int i = 0; i < samples; ++i) w.run(s[i], s[i + 1], levels[0], out, 0);
  if ((out.left - second.left) % 2 || (out.right - second.right) % 2)
    numerical_error("EdgeBandIsolationFailed", "crossing parity changes inside the bulk gap",
                    {{"levels", levels}, {"left", {out.left, second.left}}, {"right", {out.right, second.right}}});
  if ((out.left - out.right) % 2)
    numerical_error("EdgeBandIsolationFailed", "the two edges disagree on the crossing parity",
                    {{"left", out.left}, {"right", out.right}});
  out.parity = out.left % 2;
  return out;
}

int edge_crossing_parity(const RibbonFamily& ribbon) {
  if (ribbon.par_dim < 1) validation_error("InvalidInput", "ribbon has no periodic momentum");
  KVec to = KVec::Zero();
  to[0] = kPi;
  return edge_crossings(ribbon, KVec::Zero(), to).parity;
}

int mod2_analytical_index(const BlochFamily& model, const MomentumGrid& grid, const std::vector<bool>& lambda) {
  if (!model.time_reversal) validation_error("NoTimeReversal", "mod 2 index needs a time-reversal invariant model");
  if (grid.dim != model.dim || model.dim < 2)
    validation_error("InvalidGrid", "mod 2 index needs a 2D or 3D grid matching the model");
  if (int(lambda.size()) != model.dim - 1)
    validation_error("InvalidInput", "fixed point needs one flag per periodic boundary axis");
  KVec to = KVec::Zero();
  bool any = false;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    to[i] = lambda[i] ? kPi : 0.0;
    any |= lambda[i];
  }
  if (!any) validation_error("InvalidInput", "path endpoints coincide");
  RibbonFamily rb = ribbonize(model, 0, std::max(8, grid.sizes[0]));
  return edge_crossings(rb, KVec::Zero(), to).parity;
}

std::string ribbon_spectrum_csv(const RibbonFamily& ribbon, int samples) {
  std::ostringstream os;
  os.precision(10);
  os << "k,energy,left_weight,right_weight\n";
  const Eigen::Index q = std::max(1, ribbon.width / 4) * ribbon.block;
  for (int i = 0; i <= samples; ++i) {
    double k = kPi * i / samples;
    KVec kv = KVec::Zero();
    kv[0] = k;
    EigenSystem es = eigh(ribbon.evaluate(kv));
    for (Eigen::Index n = 0; n < es.values.size(); ++n)
      os << k << "," << es.values[n] << "," << es.vectors.col(n).head(q).squaredNorm() << ","
         << es.vectors.col(n).tail(q).squaredNorm() << "\n";
  }
  return os.str();
}

}  // namespace topo
