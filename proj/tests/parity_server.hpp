#pragma once

#include <ovmot/errors.hpp>
#include <ovmot/scoring.hpp>
#include <ovmot/serializer.hpp>

#include "httplib.h"
#include "json.hpp"

#include <atomic>
#include <string>
#include <thread>

namespace ovmot::fixtures {

// In-process stand-in for the scoring service in parity mode: recomputes
// the geometric score from each prompt's box slots.
class ParityServer {
public:
    explicit ParityServer(GeoScorerParams params = {}, std::size_t max_batch = 256)
        : params_(params), max_batch_(max_batch) {
        server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"mode": "parity", "version": "test"})", "application/json");
        });
        server_.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
            ++score_calls_;
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::exception&) {
                res.status = 400;
                return;
            }
            const auto& pairs = body.at("pairs");
            if (pairs.size() > max_batch_) {
                res.status = 413;
                return;
            }
            nlohmann::json scores = nlohmann::json::array();
            for (const auto& p : pairs) {
                const auto s = geometric_score(prompt_from_json(p.at("prompt")), params_);
                scores.push_back({{"pair_id", p.at("pair_id")}, {"p", s.p}, {"q", *s.q}});
            }
            res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~ParityServer() {
        server_.stop();
        thread_.join();
    }

    ParityServer(const ParityServer&) = delete;
    ParityServer& operator=(const ParityServer&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int score_calls() const { return score_calls_.load(); }

private:
    GeoScorerParams params_;
    std::size_t max_batch_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> score_calls_{0};
};

} // namespace ovmot::fixtures
