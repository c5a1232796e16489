#pragma once
// Verification of mined candidates: an oracle backed by the held-out facts,
// and a live session answered by a human through the verify API.

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pkgc/kg_store.hpp"
#include "pkgc/miner.hpp"
#include "pkgc/triple.hpp"

namespace pkgc {

enum class VerdictSource { Oracle, Human };

inline const char* source_name(VerdictSource s) { return s == VerdictSource::Oracle ? "oracle" : "human"; }

struct Verdict {
    Triple triple;
    bool accepted = false;
    VerdictSource source = VerdictSource::Oracle;
};

struct VerificationResult {
    std::vector<Verdict> verdicts;
    FactSet accepted;   // F_new
    FactSet timed_out;  // no verdict before the deadline; re-proposable
};

// F_new = candidates ∩ unexplored; one verdict per candidate in packed order.
inline VerificationResult verify_oracle(const FactSet& candidates, const FactSet& unexplored) {
    VerificationResult out;
    for (const auto& f : candidates.sorted()) {
        const bool ok = unexplored.contains(f);
        out.verdicts.push_back({f, ok, VerdictSource::Oracle});
        if (ok) out.accepted.insert(f);
    }
    return out;
}

class Verifier {
public:
    virtual ~Verifier() = default;
    // `ranked` is the mined candidate list, best first.
    virtual VerificationResult verify(std::size_t step, const std::vector<Candidate>& ranked) = 0;
};

class OracleVerifier final : public Verifier {
public:
    explicit OracleVerifier(const FactSet& unexplored) : unexplored_(unexplored) {}

    VerificationResult verify(std::size_t, const std::vector<Candidate>& ranked) override {
        FactSet candidates;
        for (const auto& c : ranked) candidates.insert_packed(c.key);
        return verify_oracle(candidates, unexplored_);
    }

private:
    const FactSet& unexplored_;
};

// Thrown into the loop when a live session closes during a step.
class SessionClosed : public std::runtime_error {
public:
    SessionClosed() : std::runtime_error("verification session closed") {}
};

struct CurvePoint {
    std::size_t step = 0;
    std::size_t candidates = 0;
    std::size_t accepted = 0;
    std::size_t known = 0;
    double completion_ratio = 0.0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct PendingCandidate {
    Triple triple;
    std::string head;
    std::string relation;
    std::string tail;
    double score = 0.0;
};

enum class PostStatus { Ok, NotFound, Conflict };

struct PostOutcome {
    PostStatus status = PostStatus::Ok;
    std::size_t applied = 0;
    std::size_t remaining = 0;
    std::string message;
};

struct SessionView {
    std::string id;
    std::size_t step = 0;
    bool step_open = false;
    std::vector<PendingCandidate> pending;  // descending score
    std::vector<std::pair<PendingCandidate, bool>> verdicted;
    std::int64_t deadline_ms = 0;  // unix epoch milliseconds
};

struct ProgressView {
    std::string id;
    std::size_t step = 0;
    double rho = 0.0;
    std::vector<CurvePoint> points;
};

// Shared state between the loop (single writer) and API handlers. All
// methods are thread-safe; reads never change loop-visible state.
class VerificationSession {
public:
    using Clock = std::chrono::system_clock;

    explicit VerificationSession(std::string id) : id_(std::move(id)) {}

    [[nodiscard]] const std::string& id() const noexcept { return id_; }

    // Loop side: publish a step's candidates.
    void open_step(std::size_t step, std::vector<PendingCandidate> candidates, Clock::time_point deadline) {
        std::lock_guard lock(mu_);
        if (closed_) throw SessionClosed();
        step_ = step;
        step_open_ = true;
        deadline_ = deadline;
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const auto& a, const auto& b) { return a.score > b.score; });
        items_.clear();
        index_.clear();
        for (auto& c : candidates) {
            index_.emplace(pack(c.triple), items_.size());
            items_.push_back({std::move(c), std::nullopt});
        }
    }

    // Loop side: block until every candidate has a verdict or the deadline
    // passes. Returns (verdict per decided triple, undecided triples).
    std::pair<std::vector<Verdict>, FactSet> await_verdicts() {
        std::unique_lock lock(mu_);
        cv_.wait_until(lock, deadline_, [&] { return closed_ || remaining_locked() == 0; });
        if (closed_) {
            step_open_ = false;
            throw SessionClosed();
        }
        std::vector<Verdict> verdicts;
        FactSet undecided;
        for (const auto& item : items_) {
            if (item.verdict)
                verdicts.push_back({item.candidate.triple, *item.verdict, VerdictSource::Human});
            else
                undecided.insert(item.candidate.triple);
        }
        step_open_ = false;
        return {std::move(verdicts), std::move(undecided)};
    }

    void set_progress(double rho, std::vector<CurvePoint> points) {
        std::lock_guard lock(mu_);
        rho_ = rho;
        points_ = std::move(points);
    }

    void close() {
        {
            std::lock_guard lock(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    [[nodiscard]] bool closed() const {
        std::lock_guard lock(mu_);
        return closed_;
    }

    // API side. All-or-nothing: a conflicting entry leaves the state as it was.
    PostOutcome post_verdicts(const std::vector<std::pair<Triple, bool>>& verdicts) {
        PostOutcome out;
        {
            std::lock_guard lock(mu_);
            if (!step_open_) {
                out.status = PostStatus::Conflict;
                out.message = "no verification step in progress";
                out.remaining = 0;
                return out;
            }
            std::unordered_map<PackedTriple, bool> batch;
            for (const auto& [triple, accepted] : verdicts) {
                auto it = index_.find(pack(triple));
                if (it == index_.end()) {
                    out.status = PostStatus::Conflict;
                    out.message = "triple is not a candidate of step " + std::to_string(step_);
                    out.remaining = remaining_locked();
                    return out;
                }
                const auto& existing = items_[it->second].verdict;
                auto [b, inserted] = batch.try_emplace(pack(triple), accepted);
                if ((existing && *existing != accepted) || (!inserted && b->second != accepted)) {
                    out.status = PostStatus::Conflict;
                    out.message = "conflicting verdict";
                    out.remaining = remaining_locked();
                    return out;
                }
            }
            for (const auto& [key, accepted] : batch) {
                auto& slot = items_[index_.at(key)].verdict;
                if (!slot) {
                    slot = accepted;
                    ++out.applied;
                }
            }
            out.remaining = remaining_locked();
        }
        cv_.notify_all();
        return out;
    }

    [[nodiscard]] SessionView candidates() const {
        std::lock_guard lock(mu_);
        SessionView v;
        v.id = id_;
        v.step = step_;
        v.step_open = step_open_;
        v.deadline_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline_.time_since_epoch()).count();
        if (!step_open_) return v;
        for (const auto& item : items_) {
            if (item.verdict)
                v.verdicted.emplace_back(item.candidate, *item.verdict);
            else
                v.pending.push_back(item.candidate);
        }
        return v;
    }

    [[nodiscard]] ProgressView progress() const {
        std::lock_guard lock(mu_);
        return ProgressView{id_, step_, rho_, points_};
    }

private:
    struct Item {
        PendingCandidate candidate;
        std::optional<bool> verdict;
    };

    std::size_t remaining_locked() const {
        return static_cast<std::size_t>(
            std::count_if(items_.begin(), items_.end(), [](const Item& i) { return !i.verdict.has_value(); }));
    }

    std::string id_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    bool closed_ = false;
    bool step_open_ = false;
    std::size_t step_ = 0;
    Clock::time_point deadline_{};
    std::vector<Item> items_;
    std::unordered_map<PackedTriple, std::size_t> index_;
    double rho_ = 0.0;
    std::vector<CurvePoint> points_;
};

// Human verification through a live session. Candidates without a verdict
// at the deadline are reported as timed out.
class SessionVerifier final : public Verifier {
public:
    SessionVerifier(VerificationSession& session, const Vocabulary& vocab, std::chrono::milliseconds timeout)
        : session_(session), vocab_(vocab), timeout_(timeout) {}

    VerificationResult verify(std::size_t step, const std::vector<Candidate>& ranked) override {
        std::vector<PendingCandidate> items;
        items.reserve(ranked.size());
        for (const auto& c : ranked) {
            const Triple f = c.triple();
            items.push_back({f, vocab_.entities.name(f.head), vocab_.relations.name(f.relation),
                             vocab_.entities.name(f.tail), c.score});
        }
        session_.open_step(step, std::move(items), VerificationSession::Clock::now() + timeout_);
        auto [verdicts, undecided] = session_.await_verdicts();
        VerificationResult out;
        out.verdicts = std::move(verdicts);
        out.timed_out = std::move(undecided);
        for (const auto& v : out.verdicts)
            if (v.accepted) out.accepted.insert(v.triple);
        return out;
    }

private:
    VerificationSession& session_;
    const Vocabulary& vocab_;
    std::chrono::milliseconds timeout_;
};

// Append-only JSON-lines audit log: {"step","h","r","t","accepted","source","ts"}.
inline void write_verdicts(std::ostream& out, std::size_t step, const std::vector<Verdict>& verdicts) {
    const auto ts = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    char buf[200];
    for (const auto& v : verdicts) {
        std::snprintf(buf, sizeof buf, "{\"step\":%zu,\"h\":%u,\"r\":%u,\"t\":%u,\"accepted\":%s,\"source\":\"%s\",\"ts\":%lld}\n",
                      step, v.triple.head, v.triple.relation, v.triple.tail, v.accepted ? "true" : "false",
                      source_name(v.source), static_cast<long long>(ts));
        out << buf;
    }
    out.flush();
}

}  // namespace pkgc
