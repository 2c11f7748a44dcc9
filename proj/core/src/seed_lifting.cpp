#include "tabmath/seed_lifting.hpp"

#include "tabmath/errors.hpp"
#include "tabmath_seed_prompt_asset.hpp"

namespace tabmath {

namespace {

std::string_view section(std::string_view asset, std::string_view name) {
  const std::string marker = "=== " + std::string(name) + " ===\n";
  const auto start = asset.find(marker);
  if (start == std::string_view::npos) {
    throw Error("seed-lifting asset has no section " + std::string(name));
  }
  const auto body = start + marker.size();
  const auto end = asset.find("\n=== ", body);
  return asset.substr(body, end == std::string_view::npos ? std::string_view::npos : end - body);
}

std::string substitute(std::string_view text, std::string_view key, std::string_view value) {
  const std::string token = "{{" + std::string(key) + "}}";
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const auto hit = text.find(token, pos);
    out += text.substr(pos, hit == std::string_view::npos ? std::string_view::npos : hit - pos);
    if (hit == std::string_view::npos) return out;
    out += value;
    pos = hit + token.size();
  }
}

std::string trim_trailing_newlines(std::string s) {
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

}  // namespace

std::string_view seed_lifting_asset() { return kSeedLiftingPromptAsset; }

std::string render_retry_feedback(const ValidationReport& report) {
  std::string issues;
  for (const auto& f : report.failures) issues += "- " + f + "\n";
  if (issues.empty()) issues = "- (no diagnostics)\n";
  return trim_trailing_newlines(
      substitute(section(seed_lifting_asset(), "RETRY_FEEDBACK"), "issues",
                 trim_trailing_newlines(issues)));
}

std::string ValidationReport::retry_feedback() const { return render_retry_feedback(*this); }

SeedPrompt render_seed_prompt(const SeedRecord& seed, const ValidationReport* previous) {
  SeedPrompt prompt;
  prompt.system = trim_trailing_newlines(std::string(section(seed_lifting_asset(), "SYSTEM")));
  std::string user(section(seed_lifting_asset(), "USER"));
  user = substitute(user, "question_id", seed.question_id);
  user = substitute(user, "question", seed.question);
  user = substitute(user, "answer", seed.answer);
  prompt.user = trim_trailing_newlines(std::move(user));
  if (previous != nullptr && !previous->accepted) {
    prompt.user += "\n\n" + render_retry_feedback(*previous);
  }
  return prompt;
}

SeedCheck check_seed_document(std::string_view document, std::uint64_t seed, std::size_t trials) {
  SeedCheck out;
  try {
    out.spec = load_spec(document);
  } catch (const std::runtime_error& e) {
    out.report.failures.push_back(std::string("load failed: ") + e.what());
    return out;
  }
  const ValidationReport base = verify_base(*out.spec);
  out.report.failures = base.failures;
  try {
    const ValidationReport gen = check_generator(*out.spec, seed, trials);
    out.report.trials = gen.trials;
    out.report.rejections = gen.rejections;
    out.report.rejection_rate = gen.rejection_rate;
    out.report.failures.insert(out.report.failures.end(), gen.failures.begin(), gen.failures.end());
  } catch (const std::runtime_error& e) {
    out.report.failures.push_back(std::string("generator check aborted: ") + e.what());
  }
  out.report.accepted = out.report.failures.empty();
  return out;
}

}  // namespace tabmath
