#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixcycle/losses.hpp"
#include "mixcycle/rng.hpp"

using namespace mixcycle;

namespace {

// A plausible tracker answer with controllable geometry, for loss tests.
TrackerOutput synthetic_output(Rng& rng, const Box7& pseudo, int n_proposals,
                               int n_points) {
  TrackerOutput out;
  double sum = 0.0;
  std::vector<double> raw;
  for (int i = 0; i < n_proposals; ++i) {
    raw.push_back(rng.uniform(0.05, 1.0));
    sum += raw.back();
  }
  for (int i = 0; i < n_proposals; ++i) {
    Box7 b = pseudo;
    b.center.x += rng.uniform(-1.0, 1.0);
    b.center.y += rng.uniform(-1.0, 1.0);
    b.yaw = normalize_yaw(b.yaw + rng.uniform(-0.1, 0.1));
    out.proposals.push_back({b, raw[static_cast<std::size_t>(i)] / sum});
  }
  out.selected_index = 0;
  out.selected = out.proposals[0].box;
  for (int i = 0; i < n_points; ++i) {
    out.point_fg_scores.push_back(rng.uniform(0.01, 0.99));
  }
  return out;
}

std::vector<bool> random_mask(Rng& rng, std::size_t n, double p = 0.4) {
  std::vector<bool> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = rng.bernoulli(p);
  return m;
}

}  // namespace

TEST_CASE("smooth_l1 has the textbook values and is symmetric") {
  CHECK(smooth_l1(0.0) == 0.0);
  CHECK(smooth_l1(0.5) == doctest::Approx(0.125));
  CHECK(smooth_l1(1.0) == doctest::Approx(0.5));
  CHECK(smooth_l1(2.0) == doctest::Approx(1.5));
  CHECK(smooth_l1(-2.0) == doctest::Approx(1.5));
  // continuity across the quadratic/linear switch
  CHECK(smooth_l1(1.0 - 1e-9) == doctest::Approx(smooth_l1(1.0 + 1e-9)));
}

TEST_CASE("weighted_bce computes the weighted mean of the cross entropy") {
  // two entries by hand: -[1*log(0.8)] and -[log(1-0.3)] weighted 2 and 1
  const double expect = (2.0 * -std::log(0.8) + 1.0 * -std::log(0.7)) / 3.0;
  CHECK(weighted_bce({0.8, 0.3}, {1.0, 0.0}, {2.0, 1.0}, 3) ==
        doctest::Approx(expect).epsilon(1e-12));
  // zero weight removes the entry's numerator but the denominator is given
  CHECK(weighted_bce({0.8, 0.3}, {1.0, 0.0}, {2.0, 0.0}, 2) ==
        doctest::Approx(-std::log(0.8)).epsilon(1e-12));
  CHECK(weighted_bce({}, {}, {}, 0) == 0.0);
}

TEST_CASE("weighted_bce rejects scores outside (0,1) and stays finite inside") {
  CHECK_THROWS_AS(weighted_bce({0.0}, {1.0}, {1.0}, 1), std::domain_error);
  CHECK_THROWS_AS(weighted_bce({1.0}, {1.0}, {1.0}, 1), std::domain_error);
  CHECK_THROWS_AS(weighted_bce({-0.2}, {0.0}, {1.0}, 1), std::domain_error);
  CHECK_THROWS_AS(weighted_bce({1.2}, {0.0}, {1.0}, 1), std::domain_error);
  const double v = weighted_bce({1.0 - 1e-15}, {0.0}, {1.0}, 1);
  CHECK(std::isfinite(v));
  CHECK(v > 10.0);  // clamped near the endpoint, large but bounded
}

TEST_CASE("proposals are labeled by center distance bands") {
  const Box7 target{{0, 0, 0}, 1, 2, 1, 0};
  LossConfig cfg;
  auto prop = [&](double d) {
    Box7 b = target;
    b.center.x += d;
    return Proposal{b, 0.5};
  };
  const std::vector<Proposal> ps = {prop(0.0), prop(0.29), prop(0.3),
                                    prop(0.45), prop(0.6), prop(0.61),
                                    prop(5.0)};
  const auto labels = label_proposals(ps, target, cfg);
  CHECK(labels[0] == ProposalLabel::Positive);
  CHECK(labels[1] == ProposalLabel::Positive);
  CHECK(labels[2] == ProposalLabel::Ignore);
  CHECK(labels[3] == ProposalLabel::Ignore);
  CHECK(labels[4] == ProposalLabel::Ignore);
  CHECK(labels[5] == ProposalLabel::Negative);
  CHECK(labels[6] == ProposalLabel::Negative);
}

TEST_CASE("mix weights put lambda on foreground, 1 on background, 0 on ignore") {
  const std::vector<ProposalLabel> labels = {
      ProposalLabel::Positive, ProposalLabel::Negative, ProposalLabel::Ignore};
  const std::vector<bool> fg = {true, false};
  const MixWeights w = mix_loss_weights(0.25, labels, fg);
  CHECK(w.proposal == std::vector<double>{0.25, 1.0, 0.0});
  CHECK(w.point == std::vector<double>{0.25, 1.0});
  CHECK_THROWS_AS(mix_loss_weights(-0.1, labels, fg), std::invalid_argument);
  CHECK_THROWS_AS(mix_loss_weights(1.5, labels, fg), std::invalid_argument);
}

TEST_CASE("a perfect answer has zero regression and box loss") {
  const Box7 pseudo{{0.5, -0.5, 0.2}, 1, 2, 1, 0.4};
  TrackerOutput out;
  out.proposals = {{pseudo, 0.98}};
  Box7 neg = pseudo;
  neg.center.x += 2.0;
  out.proposals.push_back({neg, 0.02});
  out.selected_index = 0;
  out.selected = pseudo;
  out.point_fg_scores = {0.999, 0.001};
  const std::vector<bool> fg = {true, false};

  const LossReport r = sot_loss(out, pseudo, fg, 1.0, {});
  CHECK(r.l_reg == 0.0);
  CHECK(r.l_box == 0.0);
  CHECK(r.l_cla < 0.01);
  CHECK(r.lambda == 1.0);
  CHECK(r.total == doctest::Approx(r.l_cla + r.l_prop).epsilon(1e-12));
}

TEST_CASE("total is the weighted sum of the four terms") {
  Rng rng(1);
  const Box7 pseudo{{0, 0, 0}, 1, 2, 1, 0};
  const TrackerOutput out = synthetic_output(rng, pseudo, 40, 30);
  const std::vector<bool> fg = random_mask(rng, 30);
  LossConfig cfg;
  cfg.rho_cla = 0.5;
  cfg.rho_prop = 2.0;
  cfg.rho_reg = 3.0;
  cfg.rho_box = 0.25;
  const LossReport r = sot_loss(out, pseudo, fg, 0.7, cfg);
  CHECK(r.total == doctest::Approx(0.5 * r.l_cla + 2.0 * r.l_prop +
                                   3.0 * r.l_reg + 0.25 * r.l_box)
                       .epsilon(1e-12));
  CHECK(r.lambda == 0.7);
}

TEST_CASE("the classification terms are affine in lambda") {
  Rng rng(2);
  const Box7 pseudo{{0, 0, 0}, 1, 2, 1, 0};
  for (int trial = 0; trial < 20; ++trial) {
    const TrackerOutput out = synthetic_output(rng, pseudo, 60, 40);
    const std::vector<bool> fg = random_mask(rng, 40);
    const LossReport r0 = sot_loss(out, pseudo, fg, 0.0, {});
    const LossReport r1 = sot_loss(out, pseudo, fg, 1.0, {});
    for (double lam : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      const LossReport r = sot_loss(out, pseudo, fg, lam, {});
      CHECK(r.l_cla == doctest::Approx((1 - lam) * r0.l_cla + lam * r1.l_cla)
                           .epsilon(1e-9));
      CHECK(r.l_prop == doctest::Approx((1 - lam) * r0.l_prop + lam * r1.l_prop)
                            .epsilon(1e-9));
      // geometry terms ignore lambda entirely
      CHECK(r.l_reg == r0.l_reg);
      CHECK(r.l_box == r0.l_box);
    }
  }
}

TEST_CASE("with only background and negatives, lambda drops out") {
  Rng rng(3);
  const Box7 pseudo{{0, 0, 0}, 1, 2, 1, 0};
  TrackerOutput out;
  double sum = 0.0;
  for (int i = 0; i < 30; ++i) {
    Box7 b = pseudo;
    b.center.x += 1.0 + 0.1 * i;  // every proposal beyond the negative band
    out.proposals.push_back({b, 0.0});
    sum += (i + 1);
  }
  for (int i = 0; i < 30; ++i) out.proposals[i].score = (i + 1) / sum;
  out.selected_index = 29;
  out.selected = out.proposals[29].box;
  out.point_fg_scores = {0.2, 0.9, 0.5};
  const std::vector<bool> fg = {false, false, false};

  const LossReport base = sot_loss(out, pseudo, fg, 0.0, {});
  for (double lam : {0.25, 0.5, 1.0}) {
    const LossReport r = sot_loss(out, pseudo, fg, lam, {});
    CHECK(std::abs(r.l_cla - base.l_cla) <= 1e-12);
    CHECK(std::abs(r.l_prop - base.l_prop) <= 1e-12);
    CHECK(std::abs(r.total - base.total) <= 1e-12);
  }
  // no positive proposal: geometry terms vanish
  CHECK(base.l_reg == 0.0);
  CHECK(base.l_box == 0.0);
}

TEST_CASE("l_reg averages per-axis smooth-l1 over the positives") {
  const Box7 pseudo{{0, 0, 0}, 1, 2, 1, 0};
  TrackerOutput out;
  Box7 p1 = pseudo;
  p1.center = {0.1, -0.2, 0.05};
  Box7 p2 = pseudo;
  p2.center = {0.2, 0.0, 0.0};
  Box7 n1 = pseudo;
  n1.center.x = 3.0;
  out.proposals = {{p1, 0.6}, {p2, 0.3}, {n1, 0.1}};
  out.selected_index = 0;
  out.selected = p1;

  const LossReport r = sot_loss(out, pseudo, {}, 1.0, {});
  const double e1 = smooth_l1(0.1) + smooth_l1(-0.2) + smooth_l1(0.05);
  const double e2 = smooth_l1(0.2);
  CHECK(r.l_reg == doctest::Approx((e1 + e2) / 2.0).epsilon(1e-12));

  // l_box follows the highest-scoring positive (p1), including yaw wrap
  const double eb = e1 + smooth_l1(0.0);
  CHECK(r.l_box == doctest::Approx(eb).epsilon(1e-12));
}

TEST_CASE("l_box uses the wrapped yaw difference") {
  const double pi = 3.14159265358979323846;
  Box7 pseudo{{0, 0, 0}, 1, 2, 1, pi - 0.05};
  TrackerOutput out;
  Box7 p = pseudo;
  p.yaw = -pi + 0.05;  // 0.1 rad away across the wrap, not 2*pi - 0.1
  out.proposals = {{p, 0.9}};
  out.selected_index = 0;
  out.selected = p;
  const LossReport r = sot_loss(out, pseudo, {}, 1.0, {});
  CHECK(r.l_box == doctest::Approx(smooth_l1(0.1)).epsilon(1e-9));
}

TEST_CASE("tied box scores resolve to the lowest proposal index") {
  const Box7 pseudo{{0, 0, 0}, 1, 2, 1, 0};
  Box7 p1 = pseudo;
  p1.center.x = 0.2;
  Box7 p2 = pseudo;
  p2.center.x = 0.1;
  TrackerOutput out;
  out.proposals = {{p1, 0.5}, {p2, 0.5}};
  out.selected_index = 0;
  out.selected = p1;
  const LossReport r = sot_loss(out, pseudo, {}, 1.0, {});
  CHECK(r.l_box == doctest::Approx(smooth_l1(0.2)).epsilon(1e-12));
}

TEST_CASE("combined objective weights the self and consistency terms") {
  LossReport self;
  self.total = 1.5;
  LossReport con;
  con.total = 0.75;
  LossConfig cfg;  // gamma_self 1, gamma_con 2
  CHECK(combined_cycle_loss(self, con, cfg) == doctest::Approx(3.0));
  cfg.gamma_self = 0.5;
  cfg.gamma_con = 4.0;
  CHECK(combined_cycle_loss(self, con, cfg) == doctest::Approx(3.75));
}

TEST_CASE("loss reports serialize to one json line") {
  LossReport r;
  r.l_cla = 0.25;
  r.l_prop = 1.5;
  r.l_reg = 0.125;
  r.l_box = 0.0625;
  r.total = 1.9375;
  r.lambda = 0.5;
  const auto j = nlohmann::json::parse(to_json_line(r));
  CHECK(j["l_cla"] == 0.25);
  CHECK(j["l_prop"] == 1.5);
  CHECK(j["l_reg"] == 0.125);
  CHECK(j["l_box"] == 0.0625);
  CHECK(j["total"] == 1.9375);
  CHECK(j["lambda"] == 0.5);
  CHECK(to_json_line(r).find('\n') == std::string::npos);
}
