#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mci::agent {

using Clock = std::function<double()>;  // seconds since the epoch
Clock system_clock();

/// An artifact as listed in a reply.
struct ReplyArtifact {
    std::string ref;
    std::string kind;  // mask, image, caption, stats
    std::optional<std::string> caption;

    nlohmann::json to_json() const;
    static ReplyArtifact from_json(const nlohmann::json& j);
    bool operator==(const ReplyArtifact&) const = default;
};

struct Turn {
    std::string role;  // user or agent
    std::string text;
    std::vector<ReplyArtifact> artifacts;
    double time = 0;

    nlohmann::json to_json() const;
    static Turn from_json(const nlohmann::json& j);
};

/// Conversation state backed by an append-only JSON-lines journal. Every
/// mutation appends one event; replaying the journal rebuilds the session.
class Session {
public:
    Session(std::string id, std::filesystem::path journal, Clock clock);

    /// Rebuilds a session from its journal; nullopt for an unreadable file.
    static std::shared_ptr<Session> restore(const std::filesystem::path& journal, Clock clock);

    const std::string& id() const { return id_; }
    const std::filesystem::path& journal() const { return journal_; }

    void add_turn(Turn turn);
    std::vector<Turn> history() const;

    void add_pair(const std::string& pair_ref);
    std::vector<std::string> pairs() const;
    std::optional<std::string> latest_pair() const;

    void set_caption(const std::string& caption);
    std::optional<std::string> latest_caption() const;
    void set_count(const std::string& cls, std::int64_t n);
    std::map<std::string, std::int64_t> latest_counts() const;

    double created() const;
    double last_active() const;

    /// Held for the whole of one message so plans in a session never overlap.
    std::mutex& run_mutex() { return run_mutex_; }

private:
    void append(nlohmann::json event);
    void apply(const nlohmann::json& event);

    std::string id_;
    std::filesystem::path journal_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::mutex run_mutex_;
    std::vector<Turn> history_;
    std::vector<std::string> pairs_;
    std::optional<std::string> caption_;
    std::map<std::string, std::int64_t> counts_;
    double created_ = 0, last_active_ = 0;
};

/// Owns live sessions. Sessions idle for longer than the TTL expire; on
/// start-up, journals younger than the TTL are restored and older ones removed.
class SessionManager {
public:
    SessionManager(std::filesystem::path journal_dir, double ttl_s, Clock clock = system_clock());

    std::shared_ptr<Session> create();
    /// nullptr when unknown or expired.
    std::shared_ptr<Session> get(const std::string& id);
    std::size_t size() const;
    void purge_expired();

private:
    bool expired(const Session& s) const;

    std::filesystem::path dir_;
    double ttl_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

bool looks_like_session_id(const std::string& s);

}  // namespace mci::agent
