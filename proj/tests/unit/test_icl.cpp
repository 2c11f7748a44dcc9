#include <gtest/gtest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <random>
#include <sstream>
#include <thread>

#include "tabmath/errors.hpp"
#include "tabmath/icl.hpp"
#include "tabmath/io.hpp"
#include "tabmath/json_value.hpp"
#include "test_support.hpp"

using namespace tabmath;
using tabmath::lang::Value;

namespace {

IclRow row(std::initializer_list<std::int64_t> xs, std::int64_t y = 0) {
  IclRow r;
  for (auto x : xs) r.values.push_back(Value::integer(x));
  r.y = Value::integer(y);
  return r;
}

const std::vector<std::string> kCols{"slot_a", "slot_b", "slot_c"};

std::size_t count_lines_starting(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += line.rfind(prefix, 0) == 0 ? 1 : 0;
  return n;
}

class FlakyClient : public CompletionClient {
 public:
  FlakyClient(int failures, std::string reply) : failures_(failures), reply_(std::move(reply)) {}
  std::string complete(const std::string&) override {
    ++calls;
    if (calls <= failures_) return "I cannot answer that.";
    return reply_;
  }
  int calls = 0;

 private:
  int failures_;
  std::string reply_;
};

}  // namespace

TEST(SerializePrompt, ContextLineVerbatim) {
  const auto b = serialize_prompt({row({10, 80, 25}, 47)}, {row({1, 2, 3})}, "flowers", kCols);
  EXPECT_NE(b.text.find("\nCONTEXT slot_a=10, slot_b=80, slot_c=25 -> y=47\n"), std::string::npos);
  EXPECT_NE(b.text.find("\nQUERY slot_a=1, slot_b=2, slot_c=3\n"), std::string::npos);
  EXPECT_NE(b.text.find("'flowers'"), std::string::npos);
  EXPECT_NE(b.text.find("['slot_a', 'slot_b', 'slot_c']"), std::string::npos);
  EXPECT_NE(b.text.find("Return ONLY a JSON list of floats"), std::string::npos);
  EXPECT_EQ(b.expected, 1u);
  EXPECT_EQ(count_lines_starting(b.text, "CONTEXT "), 1u);
  EXPECT_EQ(count_lines_starting(b.text, "QUERY "), 1u);
  EXPECT_EQ(b.char_count(), utf8_length(b.text));
}

TEST(SerializePrompt, ColonFormat) {
  PromptOptions o;
  o.colon_format = true;
  const auto b = serialize_prompt({row({10, 80, 25}, 47)}, {row({1, 2, 3}), row({4, 5, 6})},
                                  "flowers", kCols, o);
  EXPECT_NE(b.text.find("CONTEXT: slot_a=10, slot_b=80, slot_c=25, y=47\n"), std::string::npos);
  EXPECT_NE(b.text.find("QUERY 1: slot_a=4, slot_b=5, slot_c=6\n"), std::string::npos);
}

TEST(SerializePrompt, Errors) {
  EXPECT_THROW(serialize_prompt({row({1, 2, 3}, 1)}, {}, "x", kCols), EmptyQuery);
  EXPECT_THROW(serialize_prompt({}, {row({1, 2, 3})}, "x", kCols), EmptyContext);
  EXPECT_THROW(serialize_prompt({row({1, 2}, 1)}, {row({1, 2, 3})}, "x", kCols), SchemaError);
}

TEST(SerializePrompt, InjectiveOnRows) {
  const auto a = serialize_prompt({row({1, 2, 3}, 4)}, {row({5, 6, 7})}, "x", kCols);
  const auto b = serialize_prompt({row({1, 2, 3}, 5)}, {row({5, 6, 7})}, "x", kCols);
  const auto c = serialize_prompt({row({1, 2, 3}, 4)}, {row({5, 6, 8})}, "x", kCols);
  EXPECT_NE(a.text, b.text);
  EXPECT_NE(a.text, c.text);
}

TEST(SerializePrompts, Chunking) {
  std::vector<IclRow> q;
  for (int i = 0; i < 7; ++i) q.push_back(row({i, i, i}));
  const auto ctx = std::vector<IclRow>{row({9, 9, 9}, 1)};
  EXPECT_EQ(serialize_prompts(ctx, q, "x", kCols, 0).size(), 1u);
  const auto parts = serialize_prompts(ctx, q, "x", kCols, 3);
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].expected, 3u);
  EXPECT_EQ(parts[2].expected, 1u);
  for (const auto& p : parts) EXPECT_EQ(count_lines_starting(p.text, "CONTEXT "), 1u);
}

TEST(ParsePredictions, Examples) {
  EXPECT_EQ(parse_predictions("[1.0, 2.5, 3]", 3), (std::vector<double>{1.0, 2.5, 3.0}));
  EXPECT_EQ(parse_predictions("Here are results: ```json\n[42]\n```", 1),
            (std::vector<double>{42.0}));
  EXPECT_THROW(parse_predictions("[1,2]", 3), LengthError);
  EXPECT_THROW(parse_predictions("no numbers here", 2), ParseError);
  EXPECT_THROW(parse_predictions("[\"a\", \"b\"]", 2), ParseError);
  EXPECT_THROW(parse_predictions("[1]", 0), PreconditionError);
}

TEST(ParsePredictions, SkipsOtherArrays) {
  EXPECT_EQ(parse_predictions("rows [0, 1] give [[1, 2], \"x]\"] then [3.5, -1e2]", 2),
            (std::vector<double>{0, 1}));
  EXPECT_EQ(parse_predictions("first [1,2,3] then [7, 8]", 2), (std::vector<double>{7, 8}));
  EXPECT_EQ(parse_predictions("broken [1, 2 and later [4, 5]", 2), (std::vector<double>{4, 5}));
}

TEST(ParsePredictions, RoundTripRandomVectors) {
  std::mt19937_64 gen(2025);
  std::uniform_int_distribution<int> len(1, 60);
  std::normal_distribution<double> nd(0, 1000);
  const char* wrappers[] = {"%s", "```json\n%s\n```", "Sure! Here are the predictions:\n%s\nDone.",
                            "```\n%s\n```\nThese follow the context trend."};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> want(static_cast<std::size_t>(len(gen)));
    for (auto& v : want) v = trial % 2 ? std::round(nd(gen)) : nd(gen);
    std::string body = Json(want).dump();
    std::string fmt = wrappers[trial % 4];
    const std::string text = fmt.replace(fmt.find("%s"), 2, body);
    EXPECT_EQ(parse_predictions(text, want.size()), want) << text;
  }
}

TEST(ReplayClient, LooksUpBySha) {
  test::TempDir dir("replay");
  const std::string prompt = "hello";
  write_file(dir / (ReplayCompletionClient::key(prompt) + ".txt"), "[1, 2]");
  ReplayCompletionClient c(dir.path());
  EXPECT_EQ(c.complete(prompt), "[1, 2]");
  EXPECT_THROW(c.complete("other"), IoError);
  EXPECT_EQ(ReplayCompletionClient::key(prompt), sha256_hex(prompt));
}

TEST(CompletePredictions, RetriesUntilParse) {
  PromptBundle b;
  b.text = "p";
  b.expected = 2;
  FlakyClient ok(3, "```json\n[1, 2]\n```");
  int logged = 0;
  const auto preds = complete_predictions(ok, b, 10, std::chrono::milliseconds(0),
                                          std::chrono::milliseconds(0),
                                          [&](int, const std::string&) { ++logged; });
  EXPECT_EQ(preds, (std::vector<double>{1, 2}));
  EXPECT_EQ(ok.calls, 4);
  EXPECT_EQ(logged, 3);

  FlakyClient never(100, "");
  EXPECT_THROW(complete_predictions(never, b, 4, std::chrono::milliseconds(0),
                                    std::chrono::milliseconds(0)),
               ParseError);
  EXPECT_EQ(never.calls, 4);
}

TEST(HttpClient, TemperatureMustBeZero) {
  CompletionClientConfig cfg;
  cfg.temperature = 0.7;
  EXPECT_THROW(HttpCompletionClient{cfg}, PreconditionError);
}

TEST(HttpClient, ChatCompletionAgainstLocalServer) {
  httplib::Server server;
  Json seen;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = Json::parse(req.body);
    auth = req.get_header_value("Authorization");
    const Json reply = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", "```json\n[3.5]\n```"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  CompletionClientConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "local-model";
  cfg.api_key = "secret";
  HttpCompletionClient client(cfg);
  PromptBundle b;
  b.text = "predict please";
  b.expected = 1;
  const auto preds = complete_predictions(client, b, 1, std::chrono::milliseconds(0),
                                          std::chrono::milliseconds(0));
  EXPECT_EQ(preds, (std::vector<double>{3.5}));
  EXPECT_EQ(seen["model"], "local-model");
  EXPECT_EQ(seen["temperature"], 0.0);
  EXPECT_EQ(seen["messages"][0]["role"], "user");
  EXPECT_EQ(seen["messages"][0]["content"], "predict please");
  EXPECT_EQ(auth, "Bearer secret");

  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  HttpCompletionClient broken(cfg);
  EXPECT_THROW(broken.complete("x"), IoError);

  server.stop();
  t.join();
}
