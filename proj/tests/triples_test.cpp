// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/triples.hpp"

#include <doctest.h>

#include <sstream>

#include "pstune/errors.hpp"

using namespace pstune;

namespace {

MetricsRepository two_segment_repo() {
  MetricsRepository repo;
  double losses[] = {0.9, 0.8, 0.72, 0.65, 0.50, 0.41, 0.34, 0.28};
  for (int j = 0; j < 8; ++j)
    repo.append({j, j < 4 ? "X0" : "X1", 0.5, losses[j]});
  return repo;
}

ProgressContext context() {
  ProgressContext ctx;
  ctx.policy = {DPolicyKind::BoundedSupremum, 0.0};
  ctx.epsilon = 1e-3;
  ctx.initial_loss = 1.0;
  return ctx;
}

}  // namespace

TEST_CASE("segment views carry the hand-off point under both conventions") {
  MetricsRepository repo = two_segment_repo();
  ProgressContext ctx = context();

  LossSegment first = segment_view(repo, 0, ctx);
  CHECK(first.setting_id == "X0");
  CHECK(first.j0 == -1);
  CHECK(first.switch_loss == 1.0);  // the initial model's loss
  CHECK(first.points.size() == 4);
  CHECK(first.points.front().j == 0);

  LossSegment second = segment_view(repo, 1, ctx);
  CHECK(second.setting_id == "X1");
  CHECK(second.j0 == 3);
  CHECK(second.switch_loss == 0.65);  // last loss before the switch
  CHECK(second.points.front().j == 4);
  CHECK(second.points.size() == 4);

  ctx.convention = SwitchLossConvention::FirstOfSegment;
  LossSegment alt = segment_view(repo, 1, ctx);
  CHECK(alt.j0 == 4);
  CHECK(alt.switch_loss == 0.50);  // the segment's own first record
  CHECK(alt.points.size() == 3);
  CHECK(alt.points.front().j == 5);
}

TEST_CASE("convention names parse") {
  CHECK(switch_loss_convention_from_name("prev_iteration") ==
        SwitchLossConvention::PrevIteration);
  CHECK(switch_loss_convention_from_name("first_of_segment") ==
        SwitchLossConvention::FirstOfSegment);
  CHECK_THROWS_AS(switch_loss_convention_from_name("other"), config_error);
}

TEST_CASE("triple building prices every usable segment") {
  MetricsRepository repo = two_segment_repo();
  TripleBuildResult res = build_training_triples(repo, context());
  REQUIRE(res.triples.size() == 2);
  CHECK(res.triples[0].setting_id == "X0");
  CHECK(res.triples[0].switch_loss == 1.0);
  CHECK(res.triples[1].setting_id == "X1");
  CHECK(res.triples[1].switch_loss == 0.65);
  CHECK(res.triples[0].y_seconds > 0.0);
  CHECK(res.triples[1].y_seconds > 0.0);
  CHECK(res.warnings.empty());
}

TEST_CASE("unusable segments are skipped with a warning, not an error") {
  MetricsRepository repo;
  repo.append({0, "X0", 0.5, 0.9});
  repo.append({1, "X0", 0.5, 0.9});  // constant: no distinct losses to fit
  repo.append({2, "X1", 0.5, 0.8});  // lone record: too short
  repo.append({3, "X2", 0.5, 0.7});
  repo.append({4, "X2", 0.5, 0.6});
  TripleBuildResult res = build_training_triples(repo, context());
  REQUIRE(res.triples.size() == 1);
  CHECK(res.triples[0].setting_id == "X2");
  CHECK(res.warnings.size() == 2);
}

TEST_CASE("triple building validates the context") {
  MetricsRepository repo = two_segment_repo();
  ProgressContext ctx = context();
  ctx.initial_loss = 0.0;
  CHECK_THROWS_AS(build_training_triples(repo, ctx), validation_error);
  ctx = context();
  ctx.epsilon = 0.0;
  CHECK_THROWS_AS(build_training_triples(repo, ctx), validation_error);
}

TEST_CASE("rebuilding from a reloaded repository reproduces the triples exactly") {
  MetricsRepository repo = two_segment_repo();
  ProgressContext ctx = context();
  TripleBuildResult first = build_training_triples(repo, ctx);

  std::ostringstream os;
  repo.save(os);
  std::istringstream is(os.str());
  MetricsRepository reloaded = MetricsRepository::load(is);
  TripleBuildResult second = build_training_triples(reloaded, ctx);

  REQUIRE(first.triples.size() == second.triples.size());
  for (std::size_t i = 0; i < first.triples.size(); ++i) {
    CHECK(first.triples[i].setting_id == second.triples[i].setting_id);
    CHECK(first.triples[i].switch_loss == second.triples[i].switch_loss);
    CHECK(first.triples[i].y_seconds == second.triples[i].y_seconds);
  }
}
