#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tabmath/operator_spec.hpp"

namespace tabmath {

struct SeedRecord {
  std::string question_id;
  std::string question;
  std::string answer;
};

struct SeedPrompt {
  std::string system;
  std::string user;
};

/// Pluggable compiler turning a seed problem into an operator document
/// (one JSON object). Implementations live outside this library; nothing
/// here talks to a network.
class SeedCompiler {
 public:
  virtual ~SeedCompiler() = default;
  virtual std::string compile_seed(std::string_view question, std::string_view answer) = 0;
};

/// Raw text of prompts/seed_lifting.txt, embedded at build time.
std::string_view seed_lifting_asset();

/// Fills the seed-lifting templates. When `previous` is a rejected report its
/// diagnostics are appended as the retry-feedback block.
SeedPrompt render_seed_prompt(const SeedRecord& seed,
                              const ValidationReport* previous = nullptr);

std::string render_retry_feedback(const ValidationReport& report);

struct SeedCheck {
  std::optional<OperatorSpec> spec;  // set when the document loaded
  ValidationReport report;
};

/// Runs one compiled document through load_spec, verify_base and
/// check_generator, collecting every failure into a single report.
SeedCheck check_seed_document(std::string_view document, std::uint64_t seed = 2025,
                              std::size_t trials = 1000);

}  // namespace tabmath
