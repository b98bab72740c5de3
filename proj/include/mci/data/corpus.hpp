#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mci/data/image.hpp"
#include "mci/error.hpp"

namespace mci::data {

class Vocabulary;

inline constexpr int kCaptionsPerPair = 5;

struct CaptionRecord {
    std::string pair_id;
    std::vector<std::string> sentences;            // exactly kCaptionsPerPair
    std::vector<std::vector<std::string>> tokens;  // tokenize(sentences[i])
};

CaptionRecord make_caption_record(std::string pair_id, std::vector<std::string> sentences);

/// BOS ... EOS id sequences for each sentence.
std::vector<std::vector<std::int64_t>> encode_captions(const CaptionRecord& rec, const Vocabulary& vocab);

struct CorpusRecord {
    ImagePair pair;
    LabelMap mask;
    CaptionRecord captions;
};

/// Raised for a pair whose files are missing or unreadable.
class CorpusError : public Error {
public:
    CorpusError(std::string pair_id, const std::string& what);
    const std::string& pair_id() const { return pair_id_; }

private:
    std::string pair_id_;
};

/// Entry of captions.json: {"filename", "split", "sentences": [{"raw"}]}.
struct CaptionEntry {
    std::string filename;
    Split split = Split::train;
    std::vector<std::string> sentences;
};

std::vector<CaptionEntry> read_captions_json(const std::filesystem::path& path);
void write_captions_json(const std::filesystem::path& path, const std::vector<CaptionEntry>& entries);

/// Streams one split of a corpus laid out as
///   root/{split}/A/*.png, root/{split}/B/*.png, root/{split}/label/*.png,
///   root/captions.json
/// in lexicographic filename order. A missing split directory is an empty
/// stream.
class CorpusReader {
public:
    CorpusReader(std::filesystem::path root, Split split, double resolution_m_per_px = 0.5);

    std::size_t size() const { return filenames_.size(); }
    const std::vector<std::string>& filenames() const { return filenames_; }

    CorpusRecord read(std::size_t index) const;
    /// Only the label raster; used by statistics passes that skip imagery.
    LabelMap read_mask(std::size_t index) const;
    std::optional<CorpusRecord> next();

private:
    std::filesystem::path root_;
    Split split_;
    double resolution_;
    std::vector<std::string> filenames_;
    std::map<std::string, std::vector<std::string>> captions_;  // filename -> sentences
    bool have_captions_ = false;
    std::size_t cursor_ = 0;
};

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& root, Split split);

std::string pair_id_from_filename(const std::string& filename);

}  // namespace mci::data
