#include <array>
#include <cstdlib>
#include <string>
#include <vector>

#include <json.hpp>

#include "qualpipe/gateway.hpp"
#include "qualpipe/text_util.hpp"

namespace qualpipe {

namespace {

const std::array<const char*, 20> kDomainPool = {
    "String Manipulation",  "Arithmetic and Numbers", "List Processing",
    "Sorting",              "Searching",              "Recursion",
    "Dynamic Programming",  "Geometry",               "Date and Time Handling",
    "Set Operations",       "Dictionary Lookup",      "Text Parsing",
    "Matrix Operations",    "Combinatorics",          "Number Theory",
    "Bit Manipulation",     "Data Validation",        "Sequence Analysis",
    "Tuple Handling",       "Unit Conversion",
};

const std::array<const char*, 20> kSubtaskPool = {
    "Parse the problem statement", "Identify input format",
    "Select an algorithm",         "Handle edge cases",
    "Iterate over collections",    "Apply arithmetic operations",
    "Compare values",              "Accumulate results",
    "Apply conditional logic",     "Index into sequences",
    "Build output strings",        "Use library functions",
    "Manage loop termination",     "Convert data types",
    "Validate numeric ranges",     "Track intermediate state",
    "Compose helper functions",    "Handle empty inputs",
    "Return correct type",         "Format the final answer",
};

bool contains(const std::string& haystack, const char* needle) {
  return haystack.find(needle) != std::string::npos;
}

// A deterministic pool subset that varies with the prompt (so different
// chunks propose overlapping but distinct candidate lists): an item is
// dropped iff fnv1a64(item + "|" + prompt) % 5 == 0.
template <std::size_t N>
std::vector<std::string> pool_subset(const std::array<const char*, N>& pool,
                                     const std::string& prompt) {
  std::vector<std::string> out;
  for (const char* item : pool) {
    if (fnv1a64(std::string(item) + "|" + prompt) % 5 == 0) continue;
    out.emplace_back(item);
  }
  return out;
}

std::string numbered(const std::vector<std::string>& items,
                     const std::string& item_prefix = "") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += std::to_string(i + 1) + ". " + item_prefix + items[i] + "\n";
  }
  return out;
}

// Lines of the form "N. text" / "N) text" anywhere in the prompt, in order.
std::vector<std::string> numbered_items(const std::string& text) {
  std::vector<std::string> items;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = trim(text.substr(pos, end - pos));
    std::size_t digits = 0;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) {
      ++digits;
    }
    if (digits > 0 && digits < line.size() &&
        (line[digits] == '.' || line[digits] == ')')) {
      items.push_back(trim(line.substr(digits + 1)));
    }
    pos = end + 1;
  }
  return items;
}

std::string respond_prune(const std::string& prompt) {
  const std::size_t sel = prompt.find("Select the ");
  std::size_t keep = 0;
  if (sel != std::string::npos) {
    keep = static_cast<std::size_t>(
        std::strtoul(prompt.c_str() + sel + 11, nullptr, 10));
  }
  std::vector<std::string> items = numbered_items(prompt);
  if (keep == 0 || keep > items.size()) keep = items.size();
  items.resize(keep);
  return numbered(items);
}

std::string respond_scoring(const std::string& prompt) {
  const bool is_domain = contains(prompt, "\nDomains:\n");
  const char* label = is_domain ? "Domain" : "Subtask";

  // Attribute names: the numbered list between the kind marker and the
  // excerpt marker.
  const std::size_t list_start =
      prompt.find(is_domain ? "\nDomains:\n" : "\nSubtasks:\n");
  std::size_t input_mark = prompt.rfind("\nInput:\n");
  std::size_t output_mark = prompt.rfind("\nOutput:\n");
  std::size_t excerpt_start = std::string::npos;
  std::size_t marker_len = 0;
  if (input_mark != std::string::npos &&
      (output_mark == std::string::npos || input_mark > output_mark)) {
    excerpt_start = input_mark;
    marker_len = 8;
  } else if (output_mark != std::string::npos) {
    excerpt_start = output_mark;
    marker_len = 9;
  }
  std::string list_region =
      prompt.substr(list_start == std::string::npos ? 0 : list_start,
                    (excerpt_start == std::string::npos ? prompt.size()
                                                        : excerpt_start) -
                        (list_start == std::string::npos ? 0 : list_start));
  const std::vector<std::string> names = numbered_items(list_region);
  const std::string excerpt =
      excerpt_start == std::string::npos
          ? std::string()
          : prompt.substr(excerpt_start + marker_len);

  std::string out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    const int score =
        1 + static_cast<int>(fnv1a64(names[j] + "\x1f" + excerpt) % 5);
    if (j > 0) out += " ";
    out += "[" + std::string(label) + " " + std::to_string(j + 1) + ": " +
           names[j] + ", Score: " + std::to_string(score) +
           ", Evidence: deterministic signal derived from the text]";
  }
  return out;
}

}  // namespace

std::string ScriptedEvaluator::respond(const ChatRequest& req) {
  const std::string& prompt = req.prompt;
  if (contains(prompt, "please write a brief summary")) {
    return "The model performs strongly on the high-prior domains and on "
           "the sub-tasks that carry most of the importance mass, while the "
           "lowest proficiency scores cluster in the rarer domains. Where "
           "calibration distances are available they stay small for the "
           "frequently required sub-tasks, indicating the model applies "
           "those skills when the input calls for them. Targeted "
           "augmentation of the weakest domains is the most promising next "
           "step.";
  }
  if (contains(prompt, "\nSelect the ")) {
    return respond_prune(prompt);
  }
  if (contains(prompt, "Rate on a scale of 1-5")) {
    return respond_scoring(prompt);
  }
  if (contains(prompt, "relevant domains for the data")) {
    return numbered(pool_subset(kDomainPool, prompt));
  }
  if (contains(prompt, "atomic sub-tasks")) {
    return numbered(pool_subset(kSubtaskPool, prompt), "Subtask: ");
  }
  return "UNRECOGNIZED PROMPT";
}

TransportResponse ScriptedEvaluator::post_chat_completion(
    const ChatRequest& req) {
  nlohmann::json body = {
      {"choices",
       nlohmann::json::array(
           {{{"message", {{"role", "assistant"}, {"content", respond(req)}}},
             {"finish_reason", "stop"},
             {"index", 0}}})},
      {"model", req.model},
      {"object", "chat.completion"},
  };
  TransportResponse resp;
  resp.status = 200;
  resp.body = body.dump();
  return resp;
}

}  // namespace qualpipe
