#include "mci/data/corpus.hpp"

#include <algorithm>
#include <fstream>

#include "mci/data/mask_codec.hpp"
#include "mci/data/png_io.hpp"
#include "mci/data/tokenizer.hpp"
#include "mci/data/vocabulary.hpp"

namespace fs = std::filesystem;

namespace mci::data {

CaptionRecord make_caption_record(std::string pair_id, std::vector<std::string> sentences) {
    if (sentences.size() != static_cast<std::size_t>(kCaptionsPerPair)) {
        throw CorpusError(pair_id, "expected " + std::to_string(kCaptionsPerPair) + " captions, found " +
                                       std::to_string(sentences.size()));
    }
    CaptionRecord rec;
    rec.pair_id = std::move(pair_id);
    for (const auto& s : sentences) rec.tokens.push_back(tokenize(s));
    rec.sentences = std::move(sentences);
    return rec;
}

std::vector<std::vector<std::int64_t>> encode_captions(const CaptionRecord& rec, const Vocabulary& vocab) {
    std::vector<std::vector<std::int64_t>> out;
    out.reserve(rec.tokens.size());
    for (const auto& t : rec.tokens) out.push_back(vocab.encode(t));
    return out;
}

CorpusError::CorpusError(std::string pair_id, const std::string& what)
    : Error("pair '" + pair_id + "': " + what), pair_id_(std::move(pair_id)) {}

std::string pair_id_from_filename(const std::string& filename) { return fs::path(filename).stem().string(); }

std::vector<CaptionEntry> read_captions_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    std::vector<CaptionEntry> entries;
    for (const auto& img : doc.at("images")) {
        CaptionEntry e;
        e.filename = img.at("filename").get<std::string>();
        e.split = parse_split(img.at("split").get<std::string>());
        for (const auto& s : img.at("sentences")) e.sentences.push_back(s.at("raw").get<std::string>());
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_captions_json(const fs::path& path, const std::vector<CaptionEntry>& entries) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json sentences = nlohmann::json::array();
        for (const auto& s : e.sentences) sentences.push_back({{"raw", s}});
        images.push_back({{"filename", e.filename}, {"split", to_string(e.split)}, {"sentences", sentences}});
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << nlohmann::json{{"images", images}}.dump(1) << '\n';
}

CorpusReader::CorpusReader(fs::path root, Split split, double resolution_m_per_px)
    : root_(std::move(root)), split_(split), resolution_(resolution_m_per_px) {
    const fs::path a_dir = root_ / to_string(split_) / "A";
    if (fs::is_directory(a_dir)) {
        for (const auto& entry : fs::directory_iterator(a_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".png")
                filenames_.push_back(entry.path().filename().string());
        }
    }
    std::sort(filenames_.begin(), filenames_.end());

    const fs::path captions_path = root_ / "captions.json";
    if (fs::exists(captions_path)) {
        have_captions_ = true;
        for (auto& e : read_captions_json(captions_path)) {
            if (e.split == split_) captions_[e.filename] = std::move(e.sentences);
        }
    }
}

LabelMap CorpusReader::read_mask(std::size_t index) const {
    const std::string& name = filenames_.at(index);
    const std::string id = pair_id_from_filename(name);
    const fs::path path = root_ / to_string(split_) / "label" / name;
    if (!fs::exists(path)) throw CorpusError(id, "missing label file " + path.string());
    try {
        return decode_mask(read_png(path));
    } catch (const MaskDecodeError& e) {
        throw CorpusError(id, e.what());
    } catch (const IoError& e) {
        throw CorpusError(id, e.what());
    }
}

CorpusRecord CorpusReader::read(std::size_t index) const {
    const std::string& name = filenames_.at(index);
    const std::string id = pair_id_from_filename(name);
    const fs::path split_dir = root_ / to_string(split_);

    auto load_image = [&](const char* sub) {
        const fs::path p = split_dir / sub / name;
        if (!fs::exists(p)) throw CorpusError(id, std::string("missing ") + sub + " image " + p.string());
        try {
            return read_png(p);
        } catch (const IoError& e) {
            throw CorpusError(id, e.what());
        }
    };

    CorpusRecord rec;
    rec.pair.id = id;
    rec.pair.split = split_;
    rec.pair.resolution_m_per_px = resolution_;
    rec.pair.t1 = load_image("A");
    rec.pair.t2 = load_image("B");
    if (rec.pair.t1.height() != rec.pair.t2.height() || rec.pair.t1.width() != rec.pair.t2.width())
        throw CorpusError(id, "A and B images differ in size");
    rec.mask = read_mask(index);
    if (rec.mask.height() != rec.pair.t1.height() || rec.mask.width() != rec.pair.t1.width())
        throw CorpusError(id, "label size differs from image size");

    if (!have_captions_) throw CorpusError(id, "missing captions.json under " + root_.string());
    auto it = captions_.find(name);
    if (it == captions_.end()) throw CorpusError(id, "no captions for " + name);
    rec.captions = make_caption_record(id, it->second);
    return rec;
}

std::optional<CorpusRecord> CorpusReader::next() {
    if (cursor_ >= filenames_.size()) return std::nullopt;
    return read(cursor_++);
}

std::vector<CorpusRecord> load_corpus(const fs::path& root, Split split) {
    CorpusReader reader(root, split);
    std::vector<CorpusRecord> out;
    out.reserve(reader.size());
    while (auto rec = reader.next()) out.push_back(std::move(*rec));
    return out;
}

}  // namespace mci::data
