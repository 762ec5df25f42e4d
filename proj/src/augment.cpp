#include "qualpipe/augment.hpp"

#include <algorithm>
#include <iostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "qualpipe/errors.hpp"
#include "qualpipe/json_io.hpp"
#include "qualpipe/rng.hpp"

namespace qualpipe {

namespace {

void check_unique(const std::vector<std::string>& pool_ids) {
  std::unordered_set<std::string> seen;
  for (const auto& id : pool_ids) {
    if (!seen.insert(id).second) throw DuplicateIdError(id);
  }
}

}  // namespace

std::vector<AugmentPick> select_augmentation(
    const AssignmentMatrix& assign, const std::vector<std::string>& pool_ids,
    const std::vector<std::string>& targets, int budget, std::uint64_t seed,
    bool allow_backfill) {
  if (targets.empty()) {
    throw ConfigError("augmentation targets must be non-empty");
  }
  if (budget < static_cast<int>(targets.size())) {
    throw ConfigError("augmentation budget " + std::to_string(budget) +
                      " is smaller than the number of targets " +
                      std::to_string(targets.size()));
  }
  check_unique(pool_ids);

  std::vector<std::size_t> target_cols;
  target_cols.reserve(targets.size());
  for (const auto& name : targets) {
    auto it = std::find(assign.attribute_names.begin(),
                        assign.attribute_names.end(), name);
    if (it == assign.attribute_names.end()) {
      throw ConfigError("augmentation target \"" + name +
                        "\" is not an assigned attribute");
    }
    target_cols.push_back(
        static_cast<std::size_t>(it - assign.attribute_names.begin()));
  }

  std::unordered_map<std::string, std::size_t> row_of;
  row_of.reserve(assign.instance_ids.size());
  for (std::size_t i = 0; i < assign.instance_ids.size(); ++i) {
    row_of.emplace(assign.instance_ids[i], i);
  }

  // Pool members assigned to each target, in pool order.
  std::vector<std::vector<std::string>> per_target(targets.size());
  for (const auto& id : pool_ids) {
    auto it = row_of.find(id);
    if (it == row_of.end()) continue;
    const auto& row = assign.assign[it->second];
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (row[target_cols[t]] != 0) per_target[t].push_back(id);
    }
  }

  const std::size_t n_targets = targets.size();
  const std::size_t base = static_cast<std::size_t>(budget) / n_targets;
  const std::size_t remainder = static_cast<std::size_t>(budget) % n_targets;

  Rng rng(subseed(seed, "augment-targeted"));
  std::vector<AugmentPick> picks;
  picks.reserve(static_cast<std::size_t>(budget));
  std::unordered_set<std::string> used;
  std::size_t deficit = 0;

  for (std::size_t t = 0; t < n_targets; ++t) {
    const std::size_t quota = base + (t < remainder ? 1 : 0);
    std::vector<std::string> available;
    available.reserve(per_target[t].size());
    for (const auto& id : per_target[t]) {
      if (!used.count(id)) available.push_back(id);
    }
    if (available.size() < quota) {
      if (!allow_backfill) {
        throw InsufficientPoolError(targets[t], available.size(), quota);
      }
      std::cerr << "qualpipe: warning: "
                << InsufficientPoolError(targets[t], available.size(), quota)
                       .what()
                << "; backfilling from other targets\n";
      deficit += quota - available.size();
      for (auto& id : available) {
        used.insert(id);
        picks.push_back(AugmentPick{std::move(id), targets[t]});
      }
      continue;
    }
    for (std::size_t pos : rng.sample_without_replacement(available.size(), quota)) {
      used.insert(available[pos]);
      picks.push_back(AugmentPick{available[pos], targets[t]});
    }
  }

  if (deficit > 0) {
    // Leftovers across all targets, tagged with the first target (in list
    // order) that still claims them.
    std::vector<AugmentPick> leftovers;
    std::unordered_set<std::string> queued;
    for (std::size_t t = 0; t < n_targets; ++t) {
      for (const auto& id : per_target[t]) {
        if (used.count(id) || queued.count(id)) continue;
        queued.insert(id);
        leftovers.push_back(AugmentPick{id, targets[t]});
      }
    }
    if (leftovers.size() < deficit) {
      throw InsufficientPoolError("(all targets)",
                                  picks.size() + leftovers.size(),
                                  static_cast<std::size_t>(budget));
    }
    for (std::size_t pos : rng.sample_without_replacement(leftovers.size(), deficit)) {
      used.insert(leftovers[pos].id);
      picks.push_back(leftovers[pos]);
    }
  }

  return picks;
}

std::vector<std::string> select_random_baseline(
    const std::vector<std::string>& pool_ids, int budget, std::uint64_t seed) {
  if (budget < 0) throw ConfigError("baseline budget must be non-negative");
  check_unique(pool_ids);
  const std::size_t want = static_cast<std::size_t>(budget);
  if (pool_ids.size() < want) {
    throw InsufficientPoolError("(baseline)", pool_ids.size(), want);
  }
  Rng rng(subseed(seed, "augment-baseline"));
  std::vector<std::string> out;
  out.reserve(want);
  for (std::size_t pos : rng.sample_without_replacement(pool_ids.size(), want)) {
    out.push_back(pool_ids[pos]);
  }
  return out;
}

void write_augmentation_manifest(const std::filesystem::path& path,
                                 const std::vector<AugmentPick>& targeted,
                                 const std::vector<std::string>& baseline) {
  std::string body;
  for (const auto& pick : targeted) {
    nlohmann::json line;
    line["id"] = pick.id;
    line["source"] = "targeted";
    line["domain"] = pick.domain;
    body += line.dump();
    body += '\n';
  }
  for (const auto& id : baseline) {
    nlohmann::json line;
    line["id"] = id;
    line["source"] = "baseline";
    body += line.dump();
    body += '\n';
  }
  atomic_write_file(path, body);
}

}  // namespace qualpipe
