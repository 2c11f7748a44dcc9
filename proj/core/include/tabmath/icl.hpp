#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tabmath/lang/value.hpp"

namespace tabmath {

struct IclRow {
  std::vector<lang::Value> values;  // one per column
  lang::Value y;                    // ignored for query rows
};

struct PromptOptions {
  /// "CONTEXT: a=1, y=2" / "QUERY 0: a=1" lines instead of the default
  /// "CONTEXT a=1 -> y=2" / "QUERY a=1".
  bool colon_format = false;
};

struct PromptBundle {
  std::string text;
  std::size_t expected = 0;  // number of QUERY lines
  std::string name;
  std::vector<std::string> columns;

  std::size_t char_count() const;  // UTF-8 code points of `text`
};

/// Renders the fixed regression prompt. Throws EmptyContext / EmptyQuery,
/// and SchemaError when a row's width differs from `columns`.
PromptBundle serialize_prompt(const std::vector<IclRow>& context, const std::vector<IclRow>& query,
                              std::string_view name, const std::vector<std::string>& columns,
                              const PromptOptions& options = {});

/// One prompt per chunk of at most `chunk_size` query rows, each carrying the
/// full context; chunk_size 0 means a single prompt.
std::vector<PromptBundle> serialize_prompts(const std::vector<IclRow>& context,
                                            const std::vector<IclRow>& query,
                                            std::string_view name,
                                            const std::vector<std::string>& columns,
                                            std::size_t chunk_size,
                                            const PromptOptions& options = {});

/// First JSON array of numbers with exactly `expected` elements anywhere in
/// `response` (prose and code fences are skipped). Throws LengthError when
/// numeric arrays exist but none has that length, ParseError when there are
/// none, PreconditionError when expected == 0.
std::vector<double> parse_predictions(std::string_view response, std::size_t expected);

struct CompletionClientConfig {
  std::string endpoint;  // e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string api_key;   // sent as a bearer token when non-empty
  double temperature = 0.0;
  int max_retries = 10;
  std::chrono::milliseconds timeout{120'000};
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{30'000};
};

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  /// Returns the model's text reply. Throws IoError on transport failure.
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Chat-completion over HTTP(S): one user message, temperature from config.
class HttpCompletionClient : public CompletionClient {
 public:
  explicit HttpCompletionClient(CompletionClientConfig config);
  std::string complete(const std::string& prompt) override;

 private:
  CompletionClientConfig config_;
};

/// Offline client: the reply to a prompt is the file <dir>/<sha256(prompt)>.txt.
class ReplayCompletionClient : public CompletionClient {
 public:
  explicit ReplayCompletionClient(std::filesystem::path dir);
  std::string complete(const std::string& prompt) override;
  static std::string key(const std::string& prompt);

 private:
  std::filesystem::path dir_;
};

using RetryLog = std::function<void(int attempt, const std::string& message)>;

/// Sends the prompt and parses the reply, retrying transport and parse
/// failures up to `max_retries` attempts with exponential backoff between
/// them. Rethrows the last error when every attempt fails.
std::vector<double> complete_predictions(CompletionClient& client, const PromptBundle& bundle,
                                         int max_retries,
                                         std::chrono::milliseconds initial_backoff,
                                         std::chrono::milliseconds max_backoff,
                                         const RetryLog& log = {});

}  // namespace tabmath
