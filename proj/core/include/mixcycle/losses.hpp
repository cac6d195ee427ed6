#pragma once

#include <string>
#include <vector>

#include "mixcycle/geometry.hpp"
#include "mixcycle/tracking.hpp"

namespace mixcycle {

enum class ProposalLabel { Positive, Negative, Ignore };

struct LossConfig {
  double rho_cla = 1.0;
  double rho_prop = 1.0;
  double rho_reg = 1.0;
  double rho_box = 1.0;
  double gamma_self = 1.0;  // weight of the self-tracking term
  double gamma_con = 2.0;   // weight of the backward-consistency term
  double positive_dist_m = 0.3;
  double negative_dist_m = 0.6;
};

struct LossReport {
  double l_cla = 0.0;
  double l_prop = 0.0;
  double l_reg = 0.0;
  double l_box = 0.0;
  double total = 0.0;
  double lambda = 1.0;
};

std::string to_json_line(const LossReport& r);

// Positive within positive_dist_m of the target center, negative beyond
// negative_dist_m, ignored in between.
std::vector<ProposalLabel> label_proposals(const std::vector<Proposal>& proposals,
                                           const Box7& target,
                                           const LossConfig& cfg);

// Mixing-ratio loss weights: lambda on foreground/positive entries, 1 on
// background/negative, 0 on ignored proposals.
struct MixWeights {
  std::vector<double> proposal;
  std::vector<double> point;
};
MixWeights mix_loss_weights(double lambda,
                            const std::vector<ProposalLabel>& labels,
                            const std::vector<bool>& point_fg);

// Sum of weight*BCE over entries divided by `denom`; scores must lie
// strictly inside (0, 1) and are clamped away from the endpoints before the
// log. Returns 0 when denom is 0.
double weighted_bce(const std::vector<double>& scores,
                    const std::vector<double>& targets,
                    const std::vector<double>& weights, std::size_t denom);

double smooth_l1(double x);

// Full single-frame tracking loss against a pseudo label:
//   total = rho_cla*l_cla + rho_prop*l_prop + rho_reg*l_reg + rho_box*l_box
// l_cla: lambda-weighted BCE of point foreground scores vs fg_mask.
// l_prop: lambda-weighted BCE of proposal scores vs center-distance labels,
//         averaged over non-ignored proposals.
// l_reg: mean over positive proposals of per-axis smooth-L1 between proposal
//        center and the pseudo center.
// l_box: smooth-L1 of the best positive proposal (center and wrapped yaw
//        offset) against the pseudo box; 0 when no proposal is positive.
LossReport sot_loss(const TrackerOutput& out, const Box7& pseudo_label,
                    const std::vector<bool>& fg_mask, double lambda,
                    const LossConfig& cfg);

// gamma_self * self.total + gamma_con * con0.total
double combined_cycle_loss(const LossReport& self, const LossReport& con0,
                           const LossConfig& cfg);

}  // namespace mixcycle
