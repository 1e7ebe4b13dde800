#pragma once

#include "reach/geometry.hpp"
#include "reach/opt/linear_program.hpp"

#include <limits>
#include <vector>

namespace reach {

/// Limbs attached at one pose. The achievable set is
///   { sum_i t_i g_i + [0; tau] : 0 <= t_i <= u_i, |tau_a| <= shoulder_moment * attached_count }.
struct GeneratorSet {
  std::vector<Wrench> generators;  // unit tension wrenches
  std::vector<double> upper;       // u_i, N
  double shoulder_moment = 0.0;    // per attached limb, Nm
  int attached_count = 0;

  void add(const Wrench& g, double u) {
    generators.push_back(g);
    upper.push_back(u);
    ++attached_count;
  }
  int size() const { return static_cast<int>(generators.size()); }
  /// Half-width of the net torque box.
  double torque_box() const { return shoulder_moment * attached_count; }

  void validate() const;
};

/// Hull of the weighted basis wrenches sigma_k * B_k, centred on the desired wrench.
struct TaskPolytope {
  std::vector<Wrench> basis;    // unit 6-vectors
  std::vector<double> weights;  // sigma_k > 0

  int size() const { return static_cast<int>(basis.size()); }
  void validate() const;

  /// The 12 signed axes +-e_a with weight max(stds[a], floor) on both signs.
  static TaskPolytope axis_aligned(const Vec6& stds, double floor = 1e-3);
};

/// True when the torque block of `direction` outweighs its force block.
bool is_torque_direction(const Wrench& direction);

/// Membership LP of `w` in the achievable set of `gen`.
bool achievable(const GeneratorSet& gen, const Wrench& w);

struct MarginResult {
  bool achievable = false;
  double margin = -std::numeric_limits<double>::infinity();  // min_k s_k / sigma_k
  std::vector<double> scaled;                                // s_k / sigma_k per basis direction
};

/// Largest z with w_des + z sigma_k B_k achievable for every k.
MarginResult inscribed_margin(const GeneratorSet& gen, const Wrench& w_des, const TaskPolytope& poly);

/// lambda = 1 + |sigma_F| |dTheta| / |sigma_tau|.
double torque_weight_factor(const TaskPolytope& poly, double orientation_error);

/// Copy of `poly` with every torque-direction weight multiplied by torque_weight_factor().
TaskPolytope scale_torque_weights(const TaskPolytope& poly, double orientation_error);

/// Maximizer of d . w over the achievable set, one per direction.
std::vector<Wrench> support_points(const GeneratorSet& gen, const std::vector<Wrench>& directions);

/// Polytope inscribed in the ellipsoid diag(stds) S^5: each unit u in `samples` gives the
/// direction diag(stds) u, normalized and weighted by its length. Reported next to the
/// axis-aligned margin as an ellipsoid proxy.
TaskPolytope ellipsoid_polytope(const Vec6& stds, const std::vector<Vec6>& samples);

}  // namespace reach
