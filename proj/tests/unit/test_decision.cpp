#include "doctest.h"
#include "fixtures.hpp"
#include "pedsim/decision.hpp"
#include "pedsim/errors.hpp"

using namespace pedsim;

TEST_CASE("recorded replies parse") {
  const auto replies = fixtures::golden_replies();
  REQUIRE(replies.size() == 9);
  const int confidence[] = {4, 4, 4, 4, 5, 5, 5, 5, 5};
  const int trust[] = {3, 3, 3, 2, 2, 2, 2, 2, 2};
  for (std::size_t i = 0; i < replies.size(); ++i) {
    CAPTURE(i);
    const auto d = parse_decision_reply(replies[i]);
    CHECK(d.action == (i < 3 ? Action::forward : Action::stop));
    CHECK(d.confidence == confidence[i]);
    CHECK(d.trust == trust[i]);
    CHECK_FALSE(d.reason.empty());
  }
}

TEST_CASE("status strings") {
  CHECK(render_status(0) == "*-o-o-o-o-|ROAD");
  CHECK(render_status(1) == "o-*-o-o-o-|ROAD");
  CHECK(render_status(4) == "o-o-o-o-*-|ROAD");
  CHECK(render_status(5) == "o-o-o-o-o-|*ROAD");
  CHECK_THROWS_AS(render_status(6), ContractViolation);
  CHECK_THROWS_AS(render_status(-1), ContractViolation);
}

TEST_CASE("actions") {
  CHECK(parse_action(" Forward. ") == Action::forward);
  CHECK(parse_action("STOP") == Action::stop);
  CHECK(parse_action("backward") == Action::backward);
  CHECK_THROWS_AS(parse_action("run"), FormatError);
  CHECK_THROWS_AS(parse_action(""), FormatError);
}

TEST_CASE("markdown decoration and multi-line reasons are tolerated") {
  const auto d = parse_decision_reply("**Decision:** Forward\n**Reason:**\nThe car is far.\n- Confidence: 4 / 5\nTrust: 2/5 - meh");
  CHECK(d.action == Action::forward);
  CHECK(d.reason == "The car is far.");
  CHECK(d.confidence == 4);
  CHECK(d.trust == 2);
}

TEST_CASE("malformed replies raise FormatError") {
  CHECK_THROWS_AS(parse_decision_reply("Reason: x\nConfidence: 3/5\nTrust: 3/5"), FormatError);
  CHECK_THROWS_AS(parse_decision_reply("Decision: stop\nConfidence: 3/5\nTrust: 3/5"), FormatError);
  CHECK_THROWS_AS(parse_decision_reply("Decision: stop\nReason: x\nTrust: 3/5"), FormatError);
  CHECK_THROWS_AS(parse_decision_reply("Decision: stop\nReason: x\nConfidence: 3/5"), FormatError);
  CHECK_THROWS_AS(parse_decision_reply("Decision: stop\nReason: x\nConfidence: 6/5\nTrust: 3/5"), FormatError);
  CHECK_THROWS_AS(parse_decision_reply("Decision: stop\nReason: x\nConfidence: 0/5\nTrust: 3/5"), FormatError);
  CHECK_THROWS_AS(parse_decision_reply("Decision: jump\nReason: x\nConfidence: 3/5\nTrust: 3/5"), FormatError);
  CHECK_THROWS_AS(parse_decision_reply("Decision: stop\nReason:\nConfidence: 3/5\nTrust: 3/5"), FormatError);
}

TEST_CASE("format and parse are inverse") {
  for (auto a : {Action::forward, Action::stop, Action::backward}) {
    for (int c = 1; c <= 5; ++c) {
      const ParsedDecision d{a, "because", c, 6 - c};
      const auto back = parse_decision_reply(format_decision_reply(d));
      CHECK(back.action == d.action);
      CHECK(back.reason == d.reason);
      CHECK(back.confidence == d.confidence);
      CHECK(back.trust == d.trust);
    }
  }
}

TEST_CASE("rating replies") {
  auto r = parse_rating_reply("Confidence: 4/5 - I was sure.");
  CHECK(r.value == 4);
  CHECK(r.reason == "I was sure.");
  r = parse_rating_reply("3 - fine");
  CHECK(r.value == 3);
  CHECK(r.reason == "fine");
  CHECK_THROWS_AS(parse_rating_reply("7/10"), FormatError);
  CHECK_THROWS_AS(parse_rating_reply("no number"), FormatError);
  CHECK_THROWS_AS(parse_rating_reply("0/5"), FormatError);
}

TEST_CASE("summary line") {
  DecisionRecord r;
  r.time_step = 3;
  r.position_before = 3;
  r.position_after = 3;
  r.action = Action::stop;
  r.status = render_status(3);
  CHECK(summary_line(r) == "Time 3: o-o-o-*-o-|ROAD (moved from 3 to 3 - stop)");
}
