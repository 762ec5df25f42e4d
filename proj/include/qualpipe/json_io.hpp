#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qualpipe/domain.hpp"

namespace qualpipe {

// JSON encoding for every domain type; encode -> decode is the identity.
void to_json(nlohmann::json& j, const Instance& v);
void from_json(const nlohmann::json& j, Instance& v);
void to_json(nlohmann::json& j, const Dataset& v);
void from_json(const nlohmann::json& j, Dataset& v);
void to_json(nlohmann::json& j, const Attribute& v);
void from_json(const nlohmann::json& j, Attribute& v);
void to_json(nlohmann::json& j, const AttributeSet& v);
void from_json(const nlohmann::json& j, AttributeSet& v);
void to_json(nlohmann::json& j, const AffinityMatrix& v);
void from_json(const nlohmann::json& j, AffinityMatrix& v);
void to_json(nlohmann::json& j, const AssignmentMatrix& v);
void from_json(const nlohmann::json& j, AssignmentMatrix& v);
void to_json(nlohmann::json& j, const MetricScore& v);
void from_json(const nlohmann::json& j, MetricScore& v);
void to_json(nlohmann::json& j, const QualitativeSample& v);
void from_json(const nlohmann::json& j, QualitativeSample& v);
void to_json(nlohmann::json& j, const EvalReport& v);
void from_json(const nlohmann::json& j, EvalReport& v);

// Reads a JSONL file; throws DataError naming the 1-based line number of
// the first malformed line.
std::vector<RawRecord> read_jsonl(const std::filesystem::path& path);

// Writes content atomically: temp file in the same directory, then rename.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content);

std::string read_file(const std::filesystem::path& path);

// --- stage artifact schemas ---

// attributes.json: {"domains": [names...], "subtasks": [names...]}.
void write_attributes_file(const std::filesystem::path& path,
                           const AttributeSet& domains,
                           const AttributeSet& subtasks);
std::pair<AttributeSet, AttributeSet> read_attributes_file(
    const std::filesystem::path& path);

// Affinity JSONL: one row object per instance:
//   {"id", "kind", "scores": [...], "evidence": [...], "imputed": [...]}.
// One file may interleave rows of both kinds.
std::string affinity_to_jsonl(const AffinityMatrix& m);
// Extracts the rows of `kind`; attribute names are supplied by the caller
// (they are not part of the row schema).
AffinityMatrix affinity_from_jsonl(const std::filesystem::path& path,
                                   AttributeKind kind,
                                   const std::vector<std::string>& attribute_names);

// Assignment JSONL: {"id", "kind", "attributes": [2 names], "scores": [2]}.
std::string assignment_to_jsonl(const AssignmentMatrix& m,
                                const AffinityMatrix& affinity);
// Rebuilds the 0/1 matrix for the rows of `kind`. Column bounds are not
// part of the row schema and are left empty for the caller to recompute.
AssignmentMatrix assignment_from_jsonl(
    const std::filesystem::path& path, AttributeKind kind,
    const std::vector<std::string>& attribute_names);

std::string metric_scores_to_jsonl(const std::vector<MetricScore>& scores);
std::vector<MetricScore> metric_scores_from_jsonl(
    const std::filesystem::path& path);

}  // namespace qualpipe
