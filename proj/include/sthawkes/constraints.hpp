#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

namespace sthawkes {

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// max |eigenvalue| of a 2x2 matrix from the characteristic polynomial;
/// complex pairs are handled by their modulus.
inline double spectral_radius(const Matrix2& a) {
  const double tr = a[0][0] + a[1][1];
  const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
  const double disc = tr * tr - 4.0 * det;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    // numerically stable root pair
    const double q = -0.5 * (tr + std::copysign(r, tr));
    const double l1 = q != 0.0 ? q / 1.0 : 0.0;
    const double l2 = q != 0.0 ? det / q : 0.0;
    return std::max(std::abs(l1), std::abs(l2));
  }
  // complex conjugate pair: |lambda|^2 = det
  return std::sqrt(det);
}

/// Spectral radius of a general square matrix (rows = target, cols = source).
inline double spectral_radius(const std::vector<std::vector<double>>& a) {
  const auto n = a.size();
  if (n == 0) return 0.0;
  if (n == 1) return std::abs(a[0][0]);
  if (n == 2) return spectral_radius(Matrix2{{{a[0][0], a[0][1]}, {a[1][0], a[1][1]}}});
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i][j];
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  double r = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) r = std::max(r, std::abs(es.eigenvalues()[i]));
  return r;
}

/// Rotation-based parametrization of a 2x2 productivity matrix:
/// A~ = R(theta) diag(lambda_b, lambda_f) R(theta)^-1, plus an asymmetry b
/// added to the (1,2) entry.
struct BranchingBlock {
  double theta{0.0};
  double lambda_b{0.5};
  double lambda_f{0.25};
  double b{0.05};
};

/// alpha_bf: effect of mark f on mark b (row b, column f of A).
struct BivariateProductivity {
  double alpha_b{0.0};
  double alpha_bf{0.0};
  double alpha_f{0.0};
  double alpha_fb{0.0};

  [[nodiscard]] Matrix2 matrix() const { return {{{alpha_b, alpha_bf}, {alpha_fb, alpha_f}}}; }
};

struct BranchingResult {
  BivariateProductivity alphas;
  double radius{0.0};
  bool accepted{false};
};

inline void check_block(const BranchingBlock& blk) {
  const double half_pi = 0.5 * std::numbers::pi;
  if (!(blk.theta >= -half_pi && blk.theta <= half_pi)) {
    throw std::invalid_argument("branching block: theta outside [-pi/2, pi/2]");
  }
  if (!(0.0 <= blk.lambda_f && blk.lambda_f <= blk.lambda_b && blk.lambda_b <= 1.0)) {
    throw std::invalid_argument("branching block: need 0 <= lambda_f <= lambda_b <= 1");
  }
  if (!(blk.b >= 0.0 && blk.b <= 1.0 - blk.lambda_b)) {
    throw std::invalid_argument("branching block: need 0 <= b <= 1 - lambda_b");
  }
}

/// Builds (alpha_b, alpha_bf, alpha_f, alpha_fb); accepted iff the spectral
/// radius of A is < 1.
inline BranchingResult build_branching_matrix(const BranchingBlock& blk) {
  check_block(blk);
  const double c = std::cos(blk.theta), s = std::sin(blk.theta);
  // R diag R^T, R orthogonal
  const double a11 = blk.lambda_b * c * c + blk.lambda_f * s * s;
  const double a22 = blk.lambda_b * s * s + blk.lambda_f * c * c;
  const double a12 = (blk.lambda_b - blk.lambda_f) * s * c;
  BranchingResult r;
  r.alphas = {a11, a12 + blk.b, a22, a12};
  r.radius = spectral_radius(r.alphas.matrix());
  r.accepted = r.radius < 1.0;
  return r;
}

/// Inverse of build_branching_matrix on its image. theta is returned in
/// (-pi/2, pi/2]; it is arbitrary (0) when lambda_b == lambda_f.
inline BranchingBlock branching_block_from(const BivariateProductivity& a) {
  BranchingBlock blk;
  blk.b = a.alpha_bf - a.alpha_fb;
  const double half_diff = 0.5 * (a.alpha_b - a.alpha_f);
  const double mean = 0.5 * (a.alpha_b + a.alpha_f);
  const double r = std::hypot(half_diff, a.alpha_fb);
  blk.lambda_b = mean + r;
  blk.lambda_f = mean - r;
  blk.theta = r > 0.0 ? 0.5 * std::atan2(2.0 * a.alpha_fb, a.alpha_b - a.alpha_f) : 0.0;
  return blk;
}

// ------------------------------------------------------------- transforms

enum class TransformKind { identity, log, logit, branching, nonstationary_range };

/// One block of the transform layer: maps a slice of the unconstrained vector
/// onto a slice of the natural parameter vector.
struct TransformBlock {
  TransformKind kind{TransformKind::identity};
  std::vector<std::size_t> indices;  // natural-parameter positions
  double lo{0.0};                    // logit: bounds; branching: theta bounds
  double hi{1.0};
  double scale{1.0};                 // identity: natural = scale * z
  double u_lo{0.0};                  // nonstationary_range: covariate range
  double u_hi{1.0};
};

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Bijection between R^d and the feasible parameter region.
class TransformLayer {
 public:
  TransformLayer() = default;
  TransformLayer(std::size_t dim, std::vector<TransformBlock> blocks)
      : dim_(dim), blocks_(std::move(blocks)) {}

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] const std::vector<TransformBlock>& blocks() const { return blocks_; }

  [[nodiscard]] std::vector<double> from_unconstrained(std::span<const double> z) const {
    check(z, "from_unconstrained");
    std::vector<double> x(dim_, 0.0);
    for (const auto& b : blocks_) {
      const auto& id = b.indices;
      switch (b.kind) {
        case TransformKind::identity: x[id[0]] = b.scale * z[id[0]]; break;
        case TransformKind::log: x[id[0]] = std::exp(z[id[0]]); break;
        case TransformKind::logit: x[id[0]] = b.lo + (b.hi - b.lo) * sigmoid(z[id[0]]); break;
        case TransformKind::branching: {
          BranchingBlock blk;
          blk.theta = b.lo + (b.hi - b.lo) * sigmoid(z[id[0]]);
          blk.lambda_b = sigmoid(z[id[1]]);
          blk.lambda_f = blk.lambda_b * sigmoid(z[id[2]]);
          blk.b = (1.0 - blk.lambda_b) * sigmoid(z[id[3]]);
          const auto r = build_branching_matrix(blk);
          x[id[0]] = r.alphas.alpha_b;
          x[id[1]] = r.alphas.alpha_bf;
          x[id[2]] = r.alphas.alpha_f;
          x[id[3]] = r.alphas.alpha_fb;
          break;
        }
        case TransformKind::nonstationary_range: {
          const double e_lo = std::exp(z[id[0]]), e_hi = std::exp(z[id[1]]);
          const double phi1 = (e_hi - e_lo) / (b.u_hi - b.u_lo);
          x[id[0]] = e_lo - phi1 * b.u_lo;
          x[id[1]] = phi1;
          break;
        }
      }
    }
    return x;
  }

  /// Throws std::domain_error for non-finite or infeasible input.
  [[nodiscard]] std::vector<double> to_unconstrained(std::span<const double> x) const {
    check(x, "to_unconstrained");
    std::vector<double> z(dim_, 0.0);
    auto need = [](bool ok, const char* what) {
      if (!ok) throw std::domain_error(std::string("to_unconstrained: ") + what);
    };
    for (const auto& b : blocks_) {
      const auto& id = b.indices;
      switch (b.kind) {
        case TransformKind::identity: z[id[0]] = x[id[0]] / b.scale; break;
        case TransformKind::log:
          need(x[id[0]] > 0.0, "positive parameter is not > 0");
          z[id[0]] = std::log(x[id[0]]);
          break;
        case TransformKind::logit: {
          need(x[id[0]] > b.lo && x[id[0]] < b.hi, "bounded parameter outside its interval");
          z[id[0]] = std::log((x[id[0]] - b.lo) / (b.hi - x[id[0]]));
          break;
        }
        case TransformKind::branching: {
          const BivariateProductivity a{x[id[0]], x[id[1]], x[id[2]], x[id[3]]};
          const auto blk = branching_block_from(a);
          need(blk.theta > b.lo && blk.theta < b.hi, "branching theta outside its interval");
          need(blk.lambda_b > 0.0 && blk.lambda_b < 1.0, "branching lambda_b outside (0, 1)");
          need(blk.lambda_f > 0.0 && blk.lambda_f < blk.lambda_b,
               "branching lambda_f outside (0, lambda_b)");
          need(blk.b > 0.0 && blk.b < 1.0 - blk.lambda_b, "branching b outside (0, 1 - lambda_b)");
          z[id[0]] = logit((blk.theta - b.lo) / (b.hi - b.lo));
          z[id[1]] = logit(blk.lambda_b);
          z[id[2]] = logit(blk.lambda_f / blk.lambda_b);
          z[id[3]] = logit(blk.b / (1.0 - blk.lambda_b));
          break;
        }
        case TransformKind::nonstationary_range: {
          const double e_lo = x[id[0]] + x[id[1]] * b.u_lo;
          const double e_hi = x[id[0]] + x[id[1]] * b.u_hi;
          need(e_lo > 0.0 && e_hi > 0.0, "phi-tilde not positive over covariate range");
          z[id[0]] = std::log(e_lo);
          z[id[1]] = std::log(e_hi);
          break;
        }
      }
    }
    return z;
  }

  /// Per-parameter flag: natural value within `tol` of a finite transform bound.
  [[nodiscard]] std::vector<bool> near_bound(std::span<const double> x, double tol = 1e-4) const {
    std::vector<bool> flags(dim_, false);
    for (const auto& b : blocks_) {
      const auto& id = b.indices;
      switch (b.kind) {
        case TransformKind::identity: break;
        case TransformKind::log: flags[id[0]] = x[id[0]] < tol; break;
        case TransformKind::logit:
          flags[id[0]] = x[id[0]] - b.lo < tol || b.hi - x[id[0]] < tol;
          break;
        case TransformKind::branching: {
          const auto blk =
              branching_block_from({x[id[0]], x[id[1]], x[id[2]], x[id[3]]});
          const bool edge = blk.theta - b.lo < tol || b.hi - blk.theta < tol ||
                            blk.lambda_b > 1.0 - tol || blk.lambda_f < tol ||
                            blk.lambda_b - blk.lambda_f < tol || blk.b < tol ||
                            (1.0 - blk.lambda_b) - blk.b < tol;
          for (auto i : id) flags[i] = edge;
          break;
        }
        case TransformKind::nonstationary_range: {
          const bool edge = x[id[0]] + x[id[1]] * b.u_lo < tol || x[id[0]] + x[id[1]] * b.u_hi < tol;
          flags[id[0]] = flags[id[1]] = edge;
          break;
        }
      }
    }
    return flags;
  }

 private:
  void check(std::span<const double> v, const char* what) const {
    if (v.size() != dim_) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    for (double d : v) {
      if (!std::isfinite(d)) throw std::domain_error(std::string(what) + ": non-finite input");
    }
  }

  std::size_t dim_{0};
  std::vector<TransformBlock> blocks_;
};

}  // namespace sthawkes
