#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qualpipe/domain.hpp"

namespace qualpipe {

// One targeted pick: the instance and the under-performing attribute it was
// selected for.
struct AugmentPick {
  std::string id;
  std::string domain;

  bool operator==(const AugmentPick&) const = default;
};

// Budget-balanced targeted selection: each target attribute gets
// budget / |targets| picks (the remainder goes one each to the first targets
// in list order), drawn uniformly without replacement across the whole
// selection from the pool instances assigned to that attribute. Throws
// InsufficientPoolError when a target's pool cannot cover its quota; with
// allow_backfill the shortfall is reported to stderr and refilled from the
// other targets' remaining pools instead.
std::vector<AugmentPick> select_augmentation(
    const AssignmentMatrix& assign, const std::vector<std::string>& pool_ids,
    const std::vector<std::string>& targets, int budget, std::uint64_t seed,
    bool allow_backfill = false);

// Uniform without-replacement draw of `budget` ids from the pool.
std::vector<std::string> select_random_baseline(
    const std::vector<std::string>& pool_ids, int budget, std::uint64_t seed);

// JSONL manifest: one {id, source, domain?} object per selected instance,
// targeted picks first.
void write_augmentation_manifest(const std::filesystem::path& path,
                                 const std::vector<AugmentPick>& targeted,
                                 const std::vector<std::string>& baseline);

}  // namespace qualpipe
