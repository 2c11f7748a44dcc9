#include <gtest/gtest.h>

#include <set>

#include "tabmath/errors.hpp"
#include "tabmath/io.hpp"
#include "tabmath/synthesis.hpp"
#include "test_support.hpp"

using namespace tabmath;
using tabmath::lang::Value;

TEST(Synthesis, FlowersRowsMatchClosedForm) {
  const auto spec = test::load_fixture("flowers");
  const Table t = synthesize_table(spec, 2048, 2025);
  ASSERT_EQ(t.rows.size(), 2048u);
  std::set<std::string> keys;
  for (const auto& row : t.rows) {
    const std::int64_t a = row.values[0].as_int();
    const std::int64_t b = row.values[1].as_int();
    const std::int64_t c = row.values[2].as_int();
    // Integer arithmetic: purple = a(100+b)/100, green = c(a+purple)/100.
    ASSERT_EQ(a * (100 + b) % 100, 0);
    const std::int64_t purple = a * (100 + b) / 100;
    ASSERT_EQ(c * (a + purple) % 100, 0);
    const std::int64_t green = c * (a + purple) / 100;
    EXPECT_EQ(row.y.as_float(), static_cast<double>(a + purple + green));
    keys.insert(canonical_key(row.values));
  }
  EXPECT_EQ(keys.size(), 2048u);
  EXPECT_GE(t.attempts, 2048u);
}

TEST(Synthesis, EveryRowReverifies) {
  for (const char* id : {"apples", "discount_tax", "distance_rate_time", "power_mod", "bakery"}) {
    const auto spec = test::load_fixture(id);
    const Table t = synthesize_table(spec, 512, 7);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto v = run_verifier(spec, normalize_assignment(spec, t.assignment(i)));
      ASSERT_TRUE(v.valid) << id << " row " << i;
      EXPECT_TRUE(labels_match(v.label, t.rows[i].y)) << id << " row " << i;
      EXPECT_LT(t.rows[i].template_index, spec.text_templates.size());
    }
  }
}

TEST(Synthesis, RestrictedDomainExhausts) {
  // a in [5, 6], b in [1, a - 1], fixed names: 4 + 5 = 9 distinct assignments.
  Json doc = test::fixture_json("apples");
  doc["generator"]["code"] =
      "fn generator() {\n"
      "  a = rng.randint(5, 6);\n"
      "  b = rng.randint(1, a - 1);\n"
      "  return {a: a, b: b, name1: \"Alice\", name2: \"Bob\"};\n"
      "}\n";
  const auto spec = load_spec(doc.dump());
  EXPECT_THROW(synthesize_table(spec, 10, 2025), ExhaustionError);
  EXPECT_EQ(synthesize_table(spec, 9, 2025).rows.size(), 9u);
}

TEST(Synthesis, DeterministicAndThreadIndependent) {
  const auto spec = test::load_fixture("apples");
  const Table a = synthesize_table(spec, 700, 99);
  const Table b = synthesize_table(spec, 700, 99);
  SynthesisOptions opts;
  opts.threads = 4;
  const Table c = synthesize_table(spec, 700, 99, opts);
  EXPECT_EQ(table_to_csv(a), table_to_csv(b));
  EXPECT_EQ(a.rows, c.rows);
  EXPECT_EQ(a.attempts, c.attempts);
  EXPECT_NE(table_to_csv(a), table_to_csv(synthesize_table(spec, 700, 100)));
}

TEST(Synthesis, ZeroRowsIsPrecondition) {
  EXPECT_THROW(synthesize_table(test::load_fixture("apples"), 0, 1), PreconditionError);
}

TEST(Synthesis, GeneratorKeySetMustMatchSlots) {
  Json doc = test::fixture_json("linear_relation");
  doc["generator"]["code"] = "fn generator() { return {a: 1}; }";
  EXPECT_THROW(synthesize_table(load_spec(doc.dump()), 5, 1), SlotMismatchError);
}

TEST(Synthesis, FloatSlotsAreNormalized) {
  const auto spec = test::load_fixture("distance_rate_time");
  const Table t = synthesize_table(spec, 20, 3);
  for (const auto& r : t.rows) {
    for (const auto& v : r.values) EXPECT_TRUE(v.is_float());
  }
}

TEST(RenderText, ApplesTemplate) {
  const auto spec = test::load_fixture("apples");
  EXPECT_EQ(render_text(spec, spec.base_assignment, 0),
            "If Alice has 12 apples and Bob has 3, how many more does Alice have?");
  EXPECT_THROW(render_text(spec, spec.base_assignment, spec.text_templates.size()),
               std::out_of_range);
  lang::Map partial = spec.base_assignment;
  partial.erase("name2");
  EXPECT_THROW(render_text(spec, partial, 0), SlotMismatchError);
}

TEST(RenderText, NoPlaceholderRemains) {
  const auto spec = test::load_fixture("apples");
  const Table t = synthesize_table(spec, 50, 1);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t k = 0; k < spec.text_templates.size(); ++k) {
      const std::string text = render_text(spec, t, i, k);
      for (const auto& name : spec.slot_names()) {
        EXPECT_EQ(text.find("[" + name + "]"), std::string::npos);
      }
    }
  }
}

TEST(TableCsv, RoundTripThroughManifest) {
  for (const char* id : {"apples", "distance_rate_time", "bakery", "pen_cost"}) {
    const auto spec = test::load_fixture(id);
    const Table t = synthesize_table(spec, 64, 5);
    const std::string csv = table_to_csv(t);
    const Json m = table_manifest(t, std::string(id) + ".csv", sha256_hex(csv));
    EXPECT_EQ(m["sha256"], sha256_hex(csv));
    const Table back = read_table(spec, csv, m);
    EXPECT_EQ(back.rows, t.rows) << id;
    EXPECT_EQ(table_to_csv(back), csv);
  }
}

TEST(TableCsv, HeaderAndQuoting) {
  const auto spec = test::load_fixture("apples");
  const Table t = synthesize_table(spec, 3, 5);
  const std::string csv = table_to_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "a,b,name1,name2,y");
  EXPECT_EQ(csv_escape("x,y"), "\"x,y\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("plain"), "plain");
  const auto rec = parse_csv("a,\"b,c\"\r\n1,\"x\"\"y\"\n");
  ASSERT_EQ(rec.size(), 2u);
  EXPECT_EQ(rec[0][1], "b,c");
  EXPECT_EQ(rec[1][1], "x\"y");
}

TEST(TableCsv, ReadRejectsTampering) {
  const auto spec = test::load_fixture("linear_relation");
  const Table t = synthesize_table(spec, 10, 5);
  const std::string csv = table_to_csv(t);
  Json m = table_manifest(t, "t.csv", sha256_hex(csv));
  EXPECT_THROW(read_table(spec, "a,c,y\n1,2,3\n", m), SchemaError);
}

TEST(ParseNumber, Kinds) {
  EXPECT_TRUE(parse_number("42").is_int());
  EXPECT_TRUE(parse_number("-3").is_int());
  EXPECT_TRUE(parse_number("4.0").is_float());
  EXPECT_TRUE(parse_number("1e-05").is_float());
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
