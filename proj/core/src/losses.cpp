#include "mixcycle/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mixcycle {

namespace {
constexpr double kLogClamp = 1e-7;
}

std::string to_json_line(const LossReport& r) {
  nlohmann::json j;
  j["l_cla"] = r.l_cla;
  j["l_prop"] = r.l_prop;
  j["l_reg"] = r.l_reg;
  j["l_box"] = r.l_box;
  j["total"] = r.total;
  j["lambda"] = r.lambda;
  return j.dump();
}

std::vector<ProposalLabel> label_proposals(const std::vector<Proposal>& proposals,
                                           const Box7& target,
                                           const LossConfig& cfg) {
  std::vector<ProposalLabel> labels;
  labels.reserve(proposals.size());
  for (const Proposal& p : proposals) {
    const double d = center_distance(p.box, target);
    if (d < cfg.positive_dist_m) {
      labels.push_back(ProposalLabel::Positive);
    } else if (d > cfg.negative_dist_m) {
      labels.push_back(ProposalLabel::Negative);
    } else {
      labels.push_back(ProposalLabel::Ignore);
    }
  }
  return labels;
}

MixWeights mix_loss_weights(double lambda,
                            const std::vector<ProposalLabel>& labels,
                            const std::vector<bool>& point_fg) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("mix_loss_weights: lambda outside [0, 1]");
  }
  MixWeights w;
  w.proposal.reserve(labels.size());
  for (ProposalLabel l : labels) {
    switch (l) {
      case ProposalLabel::Positive: w.proposal.push_back(lambda); break;
      case ProposalLabel::Negative: w.proposal.push_back(1.0); break;
      case ProposalLabel::Ignore: w.proposal.push_back(0.0); break;
    }
  }
  w.point.reserve(point_fg.size());
  for (bool fg : point_fg) w.point.push_back(fg ? lambda : 1.0);
  return w;
}

double weighted_bce(const std::vector<double>& scores,
                    const std::vector<double>& targets,
                    const std::vector<double>& weights, std::size_t denom) {
  if (scores.size() != targets.size() || scores.size() != weights.size()) {
    throw std::invalid_argument("weighted_bce: size mismatch");
  }
  if (denom == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (!(s > 0.0 && s < 1.0)) {
      throw std::domain_error("weighted_bce: score outside (0, 1)");
    }
    const double c = std::clamp(s, kLogClamp, 1.0 - kLogClamp);
    sum += weights[i] *
           -(targets[i] * std::log(c) + (1.0 - targets[i]) * std::log(1.0 - c));
  }
  return sum / static_cast<double>(denom);
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

LossReport sot_loss(const TrackerOutput& out, const Box7& pseudo_label,
                    const std::vector<bool>& fg_mask, double lambda,
                    const LossConfig& cfg) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("sot_loss: lambda outside [0, 1]");
  }
  if (out.point_fg_scores.size() != fg_mask.size()) {
    throw std::invalid_argument("sot_loss: fg mask does not match point scores");
  }

  const std::vector<ProposalLabel> labels =
      label_proposals(out.proposals, pseudo_label, cfg);
  const MixWeights w = mix_loss_weights(lambda, labels, fg_mask);

  LossReport r;
  r.lambda = lambda;

  std::vector<double> point_targets(fg_mask.size());
  for (std::size_t i = 0; i < fg_mask.size(); ++i) {
    point_targets[i] = fg_mask[i] ? 1.0 : 0.0;
  }
  r.l_cla = weighted_bce(out.point_fg_scores, point_targets, w.point,
                         fg_mask.size());

  std::vector<double> prop_scores, prop_targets, prop_weights;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < out.proposals.size(); ++i) {
    if (labels[i] == ProposalLabel::Ignore) continue;
    prop_scores.push_back(out.proposals[i].score);
    prop_targets.push_back(labels[i] == ProposalLabel::Positive ? 1.0 : 0.0);
    prop_weights.push_back(w.proposal[i]);
    ++counted;
  }
  r.l_prop = weighted_bce(prop_scores, prop_targets, prop_weights, counted);

  std::size_t n_pos = 0;
  double reg_sum = 0.0;
  std::size_t best_pos = out.proposals.size();
  for (std::size_t i = 0; i < out.proposals.size(); ++i) {
    if (labels[i] != ProposalLabel::Positive) continue;
    ++n_pos;
    const Vec3& c = out.proposals[i].box.center;
    reg_sum += smooth_l1(c.x - pseudo_label.center.x) +
               smooth_l1(c.y - pseudo_label.center.y) +
               smooth_l1(c.z - pseudo_label.center.z);
    if (best_pos == out.proposals.size() ||
        out.proposals[i].score > out.proposals[best_pos].score) {
      best_pos = i;
    }
  }
  if (n_pos > 0) {
    r.l_reg = reg_sum / static_cast<double>(n_pos);
    const Box7& b = out.proposals[best_pos].box;
    r.l_box = smooth_l1(b.center.x - pseudo_label.center.x) +
              smooth_l1(b.center.y - pseudo_label.center.y) +
              smooth_l1(b.center.z - pseudo_label.center.z) +
              smooth_l1(normalize_yaw(b.yaw - pseudo_label.yaw));
  }

  r.total = cfg.rho_cla * r.l_cla + cfg.rho_prop * r.l_prop +
            cfg.rho_reg * r.l_reg + cfg.rho_box * r.l_box;
  return r;
}

double combined_cycle_loss(const LossReport& self, const LossReport& con0,
                           const LossConfig& cfg) {
  return cfg.gamma_self * self.total + cfg.gamma_con * con0.total;
}

}  // namespace mixcycle
