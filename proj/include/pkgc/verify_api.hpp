#pragma once
// HTTP/JSON front of live verification sessions.
//
//   GET  /v1/session/{id}/candidates
//   GET  /v1/session/{id}/progress
//   POST /v1/session/{id}/verdicts   {"v":1,"verdicts":[{"h":0,"r":1,"t":2,"accepted":true}, ...]}
//
// Every body carries "v":1. Unknown session -> 404, malformed body -> 400,
// verdict for a non-pending triple or a conflicting verdict -> 409 with the
// session unchanged. Handlers only read session state or post verdicts;
// they never touch the loop directly.

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pkgc/errors.hpp"
#include "pkgc/verifier.hpp"

namespace pkgc {

inline constexpr int kApiVersion = 1;

inline nlohmann::json candidate_json(const PendingCandidate& c) {
    return {{"h", c.triple.head},   {"r", c.triple.relation}, {"t", c.triple.tail},
            {"head", c.head},       {"relation", c.relation}, {"tail", c.tail},
            {"score", c.score}};
}

inline nlohmann::json to_json(const SessionView& v) {
    nlohmann::json pending = nlohmann::json::array();
    for (const auto& c : v.pending) pending.push_back(candidate_json(c));
    nlohmann::json verdicted = nlohmann::json::array();
    for (const auto& [c, accepted] : v.verdicted) {
        auto j = candidate_json(c);
        j["accepted"] = accepted;
        verdicted.push_back(std::move(j));
    }
    return {{"v", kApiVersion},   {"session", v.id},         {"step", v.step},
            {"step_open", v.step_open}, {"deadline_ms", v.deadline_ms}, {"pending", std::move(pending)},
            {"verdicted", std::move(verdicted)}};
}

inline nlohmann::json to_json(const ProgressView& p) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& pt : p.points)
        points.push_back({{"step", pt.step},
                          {"candidates", pt.candidates},
                          {"accepted", pt.accepted},
                          {"known", pt.known},
                          {"completion_ratio", pt.completion_ratio}});
    return {{"v", kApiVersion}, {"session", p.id}, {"step", p.step}, {"rho", p.rho}, {"points", std::move(points)}};
}

// Parses a verdict post. Throws std::invalid_argument on a malformed body.
inline std::vector<std::pair<Triple, bool>> parse_verdicts(const std::string& body) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("body is not a JSON object");
    if (!j.contains("v") || j["v"] != kApiVersion) throw std::invalid_argument("unsupported or missing \"v\"");
    if (!j.contains("verdicts") || !j["verdicts"].is_array()) throw std::invalid_argument("missing \"verdicts\" array");
    std::vector<std::pair<Triple, bool>> out;
    for (const auto& item : j["verdicts"]) {
        if (!item.is_object()) throw std::invalid_argument("verdict entries must be objects");
        for (const char* f : {"h", "r", "t"})
            if (!item.contains(f) || !item[f].is_number_unsigned())
                throw std::invalid_argument(std::string("verdict lacks integer \"") + f + "\"");
        if (!item.contains("accepted") || !item["accepted"].is_boolean())
            throw std::invalid_argument("verdict lacks boolean \"accepted\"");
        const auto h = item["h"].get<std::uint64_t>(), r = item["r"].get<std::uint64_t>(),
                   t = item["t"].get<std::uint64_t>();
        if (h >= kMaxEntities || t >= kMaxEntities || r >= kMaxRelations)
            throw std::invalid_argument("triple id out of range");
        out.push_back({Triple{static_cast<EntityId>(h), static_cast<RelationId>(r), static_cast<EntityId>(t)},
                       item["accepted"].get<bool>()});
    }
    return out;
}

class VerifyApiServer {
public:
    VerifyApiServer() { routes(); }
    ~VerifyApiServer() { stop(); }

    VerifyApiServer(const VerifyApiServer&) = delete;
    VerifyApiServer& operator=(const VerifyApiServer&) = delete;

    void add_session(VerificationSession& s) {
        std::lock_guard lock(mu_);
        sessions_[s.id()] = &s;
    }

    void remove_session(const std::string& id) {
        std::lock_guard lock(mu_);
        sessions_.erase(id);
    }

    // Binds and serves in a background thread. Port 0 picks a free port.
    // Returns the bound port.
    int start(const std::string& host, int port) {
        int bound = port;
        if (port == 0)
            bound = server_.bind_to_any_port(host);
        else if (!server_.bind_to_port(host, port))
            bound = -1;
        if (bound < 0) throw ConfigError("cannot bind verify API to " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return bound;
    }

    // "host:port" form used by --serve.
    int start(const std::string& address) {
        const auto colon = address.rfind(':');
        if (colon == std::string::npos) throw ConfigError("serve address must be host:port, got '" + address + "'");
        int port = 0;
        try {
            port = std::stoi(address.substr(colon + 1));
        } catch (const std::logic_error&) {
            throw ConfigError("bad port in serve address '" + address + "'");
        }
        return start(address.substr(0, colon), port);
    }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

private:
    static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void error(httplib::Response& res, int status, const std::string& msg) {
        reply(res, status, {{"v", kApiVersion}, {"error", msg}});
    }

    VerificationSession* find(const std::string& id) {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    void routes() {
        server_.Get(R"(/v1/session/([^/]+)/candidates)", [this](const httplib::Request& req, httplib::Response& res) {
            auto* s = find(req.matches[1]);
            if (!s) return error(res, 404, "unknown session");
            reply(res, 200, to_json(s->candidates()));
        });
        server_.Get(R"(/v1/session/([^/]+)/progress)", [this](const httplib::Request& req, httplib::Response& res) {
            auto* s = find(req.matches[1]);
            if (!s) return error(res, 404, "unknown session");
            reply(res, 200, to_json(s->progress()));
        });
        server_.Post(R"(/v1/session/([^/]+)/verdicts)", [this](const httplib::Request& req, httplib::Response& res) {
            auto* s = find(req.matches[1]);
            if (!s) return error(res, 404, "unknown session");
            std::vector<std::pair<Triple, bool>> verdicts;
            try {
                verdicts = parse_verdicts(req.body);
            } catch (const std::exception& e) {
                return error(res, 400, e.what());
            }
            const auto outcome = s->post_verdicts(verdicts);
            if (outcome.status == PostStatus::Conflict)
                return reply(res, 409, {{"v", kApiVersion}, {"error", outcome.message}, {"remaining", outcome.remaining}});
            reply(res, 200, {{"v", kApiVersion}, {"applied", outcome.applied}, {"remaining", outcome.remaining}});
        });
    }

    httplib::Server server_;
    std::thread thread_;
    std::mutex mu_;
    std::map<std::string, VerificationSession*> sessions_;
};

}  // namespace pkgc
