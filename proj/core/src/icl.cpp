#include "tabmath/icl.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <thread>

#include "tabmath/errors.hpp"
#include "tabmath/io.hpp"

namespace tabmath {

std::size_t PromptBundle::char_count() const { return utf8_length(text); }

namespace {

std::string python_list(const std::vector<std::string>& names) {
  std::string out = "[";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ", ";
    out += '\'' + names[i] + '\'';
  }
  return out + "]";
}

std::string assignments(const std::vector<std::string>& columns, const IclRow& row) {
  if (row.values.size() != columns.size()) {
    throw SchemaError("ICL row has " + std::to_string(row.values.size()) + " values for " +
                      std::to_string(columns.size()) + " columns");
  }
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c > 0) out += ", ";
    out += columns[c] + '=' + lang::format_value(row.values[c]);
  }
  return out;
}

}  // namespace

PromptBundle serialize_prompt(const std::vector<IclRow>& context, const std::vector<IclRow>& query,
                              std::string_view name, const std::vector<std::string>& columns,
                              const PromptOptions& options) {
  if (context.empty()) throw EmptyContext("ICL prompt needs at least one context row");
  if (query.empty()) throw EmptyQuery("ICL prompt needs at least one query row");
  PromptBundle b;
  b.name = std::string(name);
  b.columns = columns;
  b.expected = query.size();
  std::string& t = b.text;
  t += "You are an expert regression model. The dataset '" + b.name + "' has numeric features " +
       python_list(columns) + " and target y.\n";
  t += "First, learn from the context rows (each line labelled CONTEXT). Then, predict y for each "
       "QUERY row.\n";
  t += "Return ONLY a JSON list of floats corresponding to the QUERY rows in order.\n\n";
  t += "Context rows:\n";
  for (const auto& row : context) {
    if (options.colon_format) {
      t += "CONTEXT: " + assignments(columns, row) + ", y=" + lang::format_value(row.y) + '\n';
    } else {
      t += "CONTEXT " + assignments(columns, row) + " -> y=" + lang::format_value(row.y) + '\n';
    }
  }
  t += "\nQuery rows:\n";
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (options.colon_format) {
      t += "QUERY " + std::to_string(i) + ": " + assignments(columns, query[i]) + '\n';
    } else {
      t += "QUERY " + assignments(columns, query[i]) + '\n';
    }
  }
  return b;
}

std::vector<PromptBundle> serialize_prompts(const std::vector<IclRow>& context,
                                            const std::vector<IclRow>& query,
                                            std::string_view name,
                                            const std::vector<std::string>& columns,
                                            std::size_t chunk_size,
                                            const PromptOptions& options) {
  if (chunk_size == 0 || chunk_size >= query.size()) {
    return {serialize_prompt(context, query, name, columns, options)};
  }
  std::vector<PromptBundle> out;
  for (std::size_t start = 0; start < query.size(); start += chunk_size) {
    const auto end = std::min(query.size(), start + chunk_size);
    std::vector<IclRow> part(query.begin() + static_cast<std::ptrdiff_t>(start),
                             query.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(serialize_prompt(context, part, name, columns, options));
  }
  return out;
}

namespace {

// End of the bracketed span starting at `open`, or npos when unbalanced.
// Brackets inside JSON strings are ignored.
std::size_t matching_bracket(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[') ++depth;
    else if (c == ']' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

}  // namespace

std::vector<double> parse_predictions(std::string_view response, std::size_t expected) {
  if (expected == 0) throw PreconditionError("parse_predictions: expected must be at least 1");
  bool saw_numeric = false;
  std::size_t seen_length = 0;
  for (std::size_t pos = response.find('['); pos != std::string_view::npos;
       pos = response.find('[', pos + 1)) {
    const auto close = matching_bracket(response, pos);
    if (close == std::string_view::npos) continue;
    const auto j = nlohmann::json::parse(response.substr(pos, close - pos + 1), nullptr, false);
    if (j.is_discarded() || !j.is_array() || j.empty()) continue;
    if (!std::all_of(j.begin(), j.end(), [](const auto& v) { return v.is_number(); })) continue;
    if (j.size() == expected) return j.get<std::vector<double>>();
    if (!saw_numeric) seen_length = j.size();
    saw_numeric = true;
  }
  if (saw_numeric) {
    throw LengthError("response holds a numeric array of length " + std::to_string(seen_length) +
                      ", expected " + std::to_string(expected));
  }
  throw ParseError("response contains no JSON array of numbers");
}

HttpCompletionClient::HttpCompletionClient(CompletionClientConfig config)
    : config_(std::move(config)) {
  if (config_.temperature != 0.0) {
    throw PreconditionError("completion temperature must be 0");
  }
}

std::string HttpCompletionClient::complete(const std::string& prompt) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw IoError("endpoint must be an http(s) URL: " + config_.endpoint);
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  const std::string origin = config_.endpoint.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

  httplib::Client cli(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  cli.set_read_timeout(secs);
  cli.set_write_timeout(secs);
  cli.set_connection_timeout(std::chrono::seconds(10));
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  nlohmann::json body = {{"model", config_.model},
                         {"temperature", config_.temperature},
                         {"messages", {{{"role", "user"}, {"content", prompt}}}}};
  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) throw IoError("completion request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw IoError("completion endpoint returned HTTP " + std::to_string(res->status));
  }
  const auto reply = nlohmann::json::parse(res->body, nullptr, false);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw IoError("completion response has no choices[0].message.content");
  }
}

ReplayCompletionClient::ReplayCompletionClient(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ReplayCompletionClient::key(const std::string& prompt) { return sha256_hex(prompt); }

std::string ReplayCompletionClient::complete(const std::string& prompt) {
  const auto path = dir_ / (key(prompt) + ".txt");
  if (!std::filesystem::exists(path)) {
    throw IoError("no canned response " + path.string());
  }
  return read_file(path);
}

std::vector<double> complete_predictions(CompletionClient& client, const PromptBundle& bundle,
                                         int max_retries,
                                         std::chrono::milliseconds initial_backoff,
                                         std::chrono::milliseconds max_backoff,
                                         const RetryLog& log) {
  const int attempts = std::max(1, max_retries);
  auto backoff = initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return parse_predictions(client.complete(bundle.text), bundle.expected);
    } catch (const Error& e) {
      if (log) log(attempt, e.what());
      if (attempt >= attempts) throw;
    }
    if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
    backoff = std::min(max_backoff, backoff * 2);
  }
}

}  // namespace tabmath
