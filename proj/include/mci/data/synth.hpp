#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mci/data/image.hpp"

namespace mci::data {

struct SynthOptions {
    std::uint64_t seed = 0;
    int n_pairs = 16;
    int size = 256;
    int n_val = 0;   // taken from the tail, after train
    int n_test = 0;
};

enum class EditOp { insert, remove };

struct Edit {
    ChangeClass cls = ChangeClass::building;
    EditOp op = EditOp::insert;
    // Bounding rectangle; roads are unions of axis-aligned bands inside it.
    int x = 0, y = 0, w = 0, h = 0;
};

struct SynthPair {
    std::string filename;
    ImagePair pair;
    LabelMap mask;
    std::vector<Edit> edits;
    std::vector<std::string> captions;

    std::int64_t edit_count(ChangeClass cls) const;
};

/// Deterministic in (seed, pair index, size): T2 is T1 with buildings
/// inserted or removed and thick axis-aligned road polylines laid down.
/// The mask marks exactly the edited pixels; captions are derived from
/// the edit list.
SynthPair synthesize_pair(std::uint64_t seed, int index, int size, Split split);

/// Writes the corpus in the reader's layout plus root/edit_log.json.
std::vector<SynthPair> synthesize_corpus(const SynthOptions& opts, const std::filesystem::path& out_dir);

nlohmann::json edit_log_json(const std::vector<SynthPair>& pairs);

/// Five template sentences for an edit list.
std::vector<std::string> describe_edits(const std::vector<Edit>& edits, int size);

}  // namespace mci::data
