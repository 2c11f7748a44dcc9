#include <gtest/gtest.h>

#include "tabmath/errors.hpp"
#include "tabmath/operator_spec.hpp"
#include "tabmath/seed_lifting.hpp"
#include "test_support.hpp"

using namespace tabmath;
using tabmath::lang::Value;

namespace {

bool has_failure(const ValidationReport& r, const std::string& needle) {
  for (const auto& f : r.failures) {
    if (f.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(LoadSpec, ApplesDocument) {
  const auto spec = test::load_fixture("apples");
  EXPECT_EQ(spec.id, "apples");
  EXPECT_EQ(spec.slot_names(), (std::vector<std::string>{"a", "b", "name1", "name2"}));
  EXPECT_EQ(spec.base_assignment.at("a"), Value::integer(12));
  EXPECT_EQ(spec.base_assignment.at("b"), Value::integer(3));
  EXPECT_EQ(spec.base_assignment.at("name1"), Value::string("Alice"));
  EXPECT_EQ(spec.gold_answer, Value::integer(9));
  ASSERT_NE(spec.find_slot("name1"), nullptr);
  EXPECT_EQ(spec.find_slot("name1")->kind, SlotKind::kEntity);
  EXPECT_EQ(spec.find_slot("name1")->categories.size(), 4u);
}

TEST(LoadSpec, SerializeRoundTrip) {
  for (const auto& entry : std::filesystem::directory_iterator(TABMATH_FIXTURE_DIR)) {
    const auto spec = load_spec_file(entry.path().string());
    const auto again = load_spec(spec_to_json(spec).dump());
    EXPECT_TRUE(spec == again) << entry.path();
  }
}

TEST(LoadSpec, MissingGoldIsSchemaError) {
  Json doc = test::fixture_json("apples");
  doc.erase("gold_answer");
  EXPECT_THROW(load_spec(doc.dump()), SchemaError);
}

TEST(LoadSpec, UnknownPlaceholderIsSlotMismatch) {
  Json doc = test::fixture_json("apples");
  doc["text_templates"].push_back("What about [nobody]?");
  EXPECT_THROW(load_spec(doc.dump()), SlotMismatchError);
}

TEST(LoadSpec, BaseAssignmentMustCoverSlots) {
  Json doc = test::fixture_json("apples");
  doc["base_assignment"].erase("b");
  EXPECT_THROW(load_spec(doc.dump()), SlotMismatchError);
}

TEST(LoadSpec, VerifierParamsMustMatchSlots) {
  Json doc = test::fixture_json("linear_relation");
  doc["verifier"]["code"] = "fn verifier(a) { return (true, a); }";
  EXPECT_THROW(load_spec(doc.dump()), SlotMismatchError);
}

TEST(LoadSpec, ForbiddenCodeIsRejectedOnLoad) {
  Json doc = test::fixture_json("linear_relation");
  doc["verifier"]["code"] = "import os\nfn verifier(a, b) { return (true, a); }";
  EXPECT_THROW(load_spec(doc.dump()), lang::RestrictionError);
}

TEST(LoadSpec, MalformedJson) { EXPECT_THROW(load_spec("{not json"), SchemaError); }

TEST(TemplatePlaceholders, InOrderWithRepeats) {
  EXPECT_EQ(template_placeholders("[x] and [y] then [x]"),
            (std::vector<std::string>{"x", "y", "x"}));
  EXPECT_TRUE(template_placeholders("no slots").empty());
}

TEST(VerifyBase, ApplesAccepted) {
  // a - b = 12 - 3 = 9 by hand.
  const auto r = verify_base(test::load_fixture("apples"));
  EXPECT_TRUE(r.accepted);
  EXPECT_TRUE(r.failures.empty());
}

TEST(VerifyBase, FlowersAccepted) {
  // 10 yellow, 10 * 1.8 = 18 purple, 0.25 * 28 = 7 green: 35.
  const auto r = verify_base(test::load_fixture("flowers"));
  EXPECT_TRUE(r.accepted);
}

TEST(VerifyBase, FlowersWrongGoldRejected) {
  Json doc = test::fixture_json("flowers");
  doc["gold_answer"] = 36;
  const auto r = verify_base(load_spec(doc.dump()));
  EXPECT_FALSE(r.accepted);
  EXPECT_TRUE(has_failure(r, "gold mismatch: got 35")) << r.failures.at(0);
}

TEST(VerifyBase, EveryFixtureAccepted) {
  for (const auto& entry : std::filesystem::directory_iterator(TABMATH_FIXTURE_DIR)) {
    EXPECT_TRUE(verify_base(load_spec_file(entry.path().string())).accepted) << entry.path();
  }
}

TEST(VerifyBase, InvalidBaseAndEvaluationErrorsBecomeDiagnostics) {
  Json doc = test::fixture_json("apples");
  doc["base_assignment"]["b"] = 30;
  doc["slots"]["b"]["base_value"] = 30;
  EXPECT_FALSE(verify_base(load_spec(doc.dump())).accepted);

  Json div = test::fixture_json("linear_relation");
  div["verifier"]["code"] = "fn verifier(a, b) { return (true, a / (b - 3)); }";
  const auto r = verify_base(load_spec(div.dump()));
  EXPECT_FALSE(r.accepted);
  EXPECT_FALSE(r.failures.empty());
}

TEST(Verdict, Shapes) {
  EXPECT_TRUE(interpret_verdict(Value::integer(5)).valid);
  EXPECT_FALSE(interpret_verdict(Value::boolean(false)).valid);
  const auto v = interpret_verdict(Value::pair(true, Value::floating(2.5)));
  EXPECT_TRUE(v.valid);
  EXPECT_EQ(v.label, Value::floating(2.5));
  EXPECT_THROW(interpret_verdict(Value::string("x")), lang::TypeError);
}

TEST(LabelsMatch, Rule) {
  EXPECT_TRUE(labels_match(Value::integer(35), Value::integer(35)));
  EXPECT_FALSE(labels_match(Value::integer(35), Value::integer(36)));
  EXPECT_TRUE(labels_match(Value::floating(35.0), Value::integer(35)));
  EXPECT_TRUE(labels_match(Value::floating(1.0 + 1e-12), Value::floating(1.0)));
  EXPECT_FALSE(labels_match(Value::floating(1.001), Value::floating(1.0)));
}

TEST(CheckGenerator, FlowersHasNoRejections) {
  const auto r = check_generator(test::load_fixture("flowers"), 2025, 1000);
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(r.trials, 1000u);
  ASSERT_TRUE(r.rejection_rate.has_value());
  EXPECT_EQ(*r.rejection_rate, 0.0);
}

TEST(CheckGenerator, ViolatingGeneratorRejected) {
  Json doc = test::fixture_json("apples");
  doc["generator"]["code"] =
      "fn generator() {\n"
      "  a = rng.randint(5, 50);\n"
      "  b = rng.randint(1, 60);\n"
      "  return {a: a, b: b, name1: \"Alice\", name2: \"Bob\"};\n"
      "}\n";
  const auto r = check_generator(load_spec(doc.dump()), 2025, 1000);
  EXPECT_FALSE(r.accepted);
  ASSERT_TRUE(r.rejection_rate.has_value());
  EXPECT_GT(*r.rejection_rate, 0.0);
  EXPECT_GT(r.rejections, 0u);
}

TEST(CheckGenerator, ZeroTrialsIsPrecondition) {
  EXPECT_THROW(check_generator(test::load_fixture("flowers"), 1, 0), PreconditionError);
}

TEST(CheckAssignment, KeySetAndKinds) {
  const auto spec = test::load_fixture("linear_relation");
  EXPECT_FALSE(check_assignment(spec, Value::map({{"a", Value::integer(1)},
                                                  {"b", Value::integer(2)}}))
                   .has_value());
  EXPECT_TRUE(check_assignment(spec, Value::map({{"a", Value::integer(1)}})).has_value());
  EXPECT_TRUE(check_assignment(spec, Value::map({{"a", Value::integer(1)},
                                                 {"b", Value::string("x")}}))
                  .has_value());
  EXPECT_TRUE(check_assignment(spec, Value::integer(1)).has_value());
}

TEST(SeedLifting, PromptMentionsSeedAndFeedback) {
  const SeedRecord seed{"q1", "Tom has 3 apples and buys 4 more. How many?", "7"};
  const auto prompt = render_seed_prompt(seed);
  EXPECT_FALSE(seed_lifting_asset().empty());
  EXPECT_NE(prompt.user.find(seed.question), std::string::npos);
  EXPECT_NE(prompt.user.find("7"), std::string::npos);

  ValidationReport bad;
  bad.failures = {"gold mismatch: got 8"};
  const auto retry = render_seed_prompt(seed, &bad);
  EXPECT_NE(retry.user.find("gold mismatch: got 8"), std::string::npos);
}

TEST(SeedLifting, CheckDocumentCollectsFailures) {
  const auto good = check_seed_document(read_file(test::fixture_path("flowers")));
  EXPECT_TRUE(good.spec.has_value());
  EXPECT_TRUE(good.report.accepted);

  const auto broken = check_seed_document("{\"id\": 3}");
  EXPECT_FALSE(broken.spec.has_value());
  EXPECT_FALSE(broken.report.accepted);
  EXPECT_FALSE(broken.report.failures.empty());
}
