#include "mci/agent/session.hpp"

#include <chrono>
#include <fstream>
#include <random>

#include "mci/error.hpp"

namespace mci::agent {

Clock system_clock() {
    return [] {
        return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
    };
}

nlohmann::json ReplyArtifact::to_json() const {
    nlohmann::json j = {{"ref", ref}, {"kind", kind}};
    if (caption) j["caption"] = *caption;
    return j;
}

ReplyArtifact ReplyArtifact::from_json(const nlohmann::json& j) {
    ReplyArtifact a{j.at("ref").get<std::string>(), j.at("kind").get<std::string>(), std::nullopt};
    if (j.contains("caption")) a.caption = j.at("caption").get<std::string>();
    return a;
}

nlohmann::json Turn::to_json() const {
    auto arts = nlohmann::json::array();
    for (const auto& a : artifacts) arts.push_back(a.to_json());
    return {{"role", role}, {"text", text}, {"artifacts", arts}, {"time", time}};
}

Turn Turn::from_json(const nlohmann::json& j) {
    Turn t{j.at("role").get<std::string>(), j.at("text").get<std::string>(), {}, j.value("time", 0.0)};
    for (const auto& a : j.value("artifacts", nlohmann::json::array())) t.artifacts.push_back(ReplyArtifact::from_json(a));
    return t;
}

Session::Session(std::string id, std::filesystem::path journal, Clock clock)
    : id_(std::move(id)), journal_(std::move(journal)), clock_(std::move(clock)) {
    created_ = last_active_ = clock_();
}

std::shared_ptr<Session> Session::restore(const std::filesystem::path& journal, Clock clock) {
    std::ifstream in(journal);
    if (!in) return nullptr;
    auto s = std::make_shared<Session>(journal.stem().string(), journal, std::move(clock));
    s->created_ = s->last_active_ = 0;
    bool any = false;
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        try {
            s->apply(nlohmann::json::parse(line));
            any = true;
        } catch (const nlohmann::json::exception&) {
            // A torn final line from a crash is skipped.
        }
    }
    return any ? s : nullptr;
}

void Session::apply(const nlohmann::json& e) {
    const auto kind = e.at("event").get<std::string>();
    const double t = e.value("time", 0.0);
    if (kind == "created") {
        created_ = t;
    } else if (kind == "turn") {
        history_.push_back(Turn::from_json(e.at("turn")));
    } else if (kind == "pair") {
        pairs_.push_back(e.at("pair_ref").get<std::string>());
    } else if (kind == "caption") {
        caption_ = e.at("caption").get<std::string>();
    } else if (kind == "count") {
        counts_[e.at("class").get<std::string>()] = e.at("n").get<std::int64_t>();
    }
    last_active_ = std::max(last_active_, t);
}

void Session::append(nlohmann::json event) {
    event["time"] = clock_();
    std::ofstream out(journal_, std::ios::app);
    if (!out) throw IoError("cannot append to session journal " + journal_.string());
    out << event.dump() << '\n';
    out.flush();
    apply(event);
}

void Session::add_turn(Turn turn) {
    std::lock_guard lock(mutex_);
    turn.time = clock_();
    append({{"event", "turn"}, {"turn", turn.to_json()}});
}

std::vector<Turn> Session::history() const {
    std::lock_guard lock(mutex_);
    return history_;
}

void Session::add_pair(const std::string& pair_ref) {
    std::lock_guard lock(mutex_);
    append({{"event", "pair"}, {"pair_ref", pair_ref}});
}

std::vector<std::string> Session::pairs() const {
    std::lock_guard lock(mutex_);
    return pairs_;
}

std::optional<std::string> Session::latest_pair() const {
    std::lock_guard lock(mutex_);
    if (pairs_.empty()) return std::nullopt;
    return pairs_.back();
}

void Session::set_caption(const std::string& caption) {
    std::lock_guard lock(mutex_);
    append({{"event", "caption"}, {"caption", caption}});
}

std::optional<std::string> Session::latest_caption() const {
    std::lock_guard lock(mutex_);
    return caption_;
}

void Session::set_count(const std::string& cls, std::int64_t n) {
    std::lock_guard lock(mutex_);
    append({{"event", "count"}, {"class", cls}, {"n", n}});
}

std::map<std::string, std::int64_t> Session::latest_counts() const {
    std::lock_guard lock(mutex_);
    return counts_;
}

double Session::created() const {
    std::lock_guard lock(mutex_);
    return created_;
}

double Session::last_active() const {
    std::lock_guard lock(mutex_);
    return last_active_;
}

bool looks_like_session_id(const std::string& s) {
    if (s.size() != 32) return false;
    for (char c : s)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    return true;
}

SessionManager::SessionManager(std::filesystem::path dir, double ttl_s, Clock clock)
    : dir_(std::move(dir)), ttl_(ttl_s), clock_(std::move(clock)) {
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() != ".jsonl" || !looks_like_session_id(entry.path().stem().string())) continue;
        auto s = Session::restore(entry.path(), clock_);
        if (s && !expired(*s)) {
            sessions_[s->id()] = s;
        } else {
            std::error_code ec;
            std::filesystem::remove(entry.path(), ec);
        }
    }
}

bool SessionManager::expired(const Session& s) const { return clock_() - s.last_active() > ttl_; }

std::shared_ptr<Session> SessionManager::create() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mutex_);
    std::string id;
    do {
        char buf[33];
        std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                      static_cast<unsigned long long>(rng()));
        id = buf;
    } while (sessions_.count(id));
    auto s = std::make_shared<Session>(id, dir_ / (id + ".jsonl"), clock_);
    {
        std::ofstream out(s->journal(), std::ios::app);
        if (!out) throw IoError("cannot create session journal in " + dir_.string());
        out << nlohmann::json{{"event", "created"}, {"id", id}, {"time", s->created()}}.dump() << '\n';
    }
    sessions_[id] = s;
    return s;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    if (expired(*it->second)) {
        std::error_code ec;
        std::filesystem::remove(it->second->journal(), ec);
        sessions_.erase(it);
        return nullptr;
    }
    return it->second;
}

std::size_t SessionManager::size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

void SessionManager::purge_expired() {
    std::lock_guard lock(mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        if (expired(*it->second)) {
            std::error_code ec;
            std::filesystem::remove(it->second->journal(), ec);
            it = sessions_.erase(it);
        } else {
            ++it;
        }
    }
}

}  // namespace mci::agent
