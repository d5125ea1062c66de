#pragma once

#include "ema/averaging.hpp"
#include "ema/metrics.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace ema::session {

/// Errors carrying the HTTP status they map to.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, const std::string& msg) : std::runtime_error(msg), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

enum class Status { Running, WaitingForAnswer, Finished, TimedOut, Failed };

std::string_view toString(Status s);

struct AnsweredQuery {
    std::uint64_t queryId = 0;
    ExpertQuery query;
    ExpertAnswer answer;
    std::string timestamp;
};

class Session;

/// Owns all sessions. Each session runs expert model averaging on its own
/// worker thread and blocks at every expert call until an answer is
/// submitted or the timeout elapses.
class SessionManager {
public:
    SessionManager() = default;
    ~SessionManager();
    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    /// Body: {"models": [graph docs] | "modelPaths": [...], "variables"?,
    /// "truth"?: graph doc, "truthPath"?, "theta1"?, "theta2"?, "seed"?,
    /// "tieBreak"?, "timeoutSeconds"?, "description"?, "expert"?: "human"}.
    std::string create(const nlohmann::json& body);

    nlohmann::json status(const std::string& id) const;
    nlohmann::json pending(const std::string& id) const;
    /// Body: {"queryId", "accept": bool} or {"queryId", "parent", "child"}.
    nlohmann::json submit(const std::string& id, const nlohmann::json& body);
    nlohmann::json result(const std::string& id) const;
    nlohmann::json trace(const std::string& id) const;

    /// Blocks until the session leaves Running/WaitingForAnswer or the
    /// deadline passes; returns the final status.
    Status waitFinished(const std::string& id, std::chrono::milliseconds deadline) const;
    /// Blocks until a query is pending (or the session ends).
    bool waitPending(const std::string& id, std::chrono::milliseconds deadline) const;

private:
    std::shared_ptr<Session> find(const std::string& id) const;

    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t nextId_ = 1;
};

/// HTTP JSON front end for a SessionManager.
class SessionServer {
public:
    explicit SessionServer(SessionManager& manager);
    ~SessionServer();

    /// Binds and serves on a background thread; port 0 picks a free port.
    /// Returns the bound port.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    bool listen(const std::string& host, int port);
    void stop();

private:
    void routes();

    SessionManager& manager_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace ema::session
