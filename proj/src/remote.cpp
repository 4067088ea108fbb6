#include "ibis/remote.hpp"

#include <fmt/core.h>
#include <httplib.h>
#include <json.hpp>

#include "ibis/environment.hpp"

namespace ibis {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

struct Url {
    std::string origin;  // scheme://host:port
    std::string path;    // prefix without trailing slash
};

Url split_url(const std::string& endpoint) {
    const auto scheme = endpoint.find("://");
    const auto path_at = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_at == std::string::npos) return {endpoint, ""};
    std::string path = endpoint.substr(path_at);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {endpoint.substr(0, path_at), path};
}

[[noreturn]] void protocol_error(const std::string& msg, const std::string& raw) {
    throw ProtocolError(fmt::format("segmenter protocol: {}", msg), raw);
}

// POST with retries on transport failure. Non-200 answers are protocol errors.
std::string post_json(const std::string& endpoint, const std::string& route, const std::string& body,
                      std::chrono::milliseconds timeout, int retries) {
    const Url url = split_url(endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    std::string last_error;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        auto res = client.Post(url.path + route, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) protocol_error(fmt::format("HTTP status {}", res->status), res->body);
        return res->body;
    }
    throw TransportError(fmt::format("POST {}{} failed after {} attempt(s): {}", endpoint, route, retries + 1,
                                     last_error),
                         last_error);
}

}  // namespace

std::string encode_predict_request(const Image& img, const PromptSet& prompts) {
    ordered_json j;
    j["image_png_b64"] = base64_encode(encode_image_png(img));
    ordered_json clicks = ordered_json::array();
    for (const Click& c : prompts.clicks) {
        ordered_json e;
        e["row"] = c.row;
        e["col"] = c.col;
        e["polarity"] = std::string(to_string(c.polarity));
        if (c.radius_hint) e["radius"] = *c.radius_hint;
        clicks.push_back(e);
    }
    j["clicks"] = clicks;
    if (prompts.prior) j["prior_b64"] = base64_encode(prompts.prior->payload);
    return j.dump();
}

std::pair<Image, PromptSet> decode_predict_request(const std::string& body) {
    try {
        const json j = json::parse(body);
        Image img = decode_image_png(base64_decode(j.at("image_png_b64").get<std::string>()));
        PromptSet prompts;
        for (const auto& e : j.at("clicks")) {
            Click c;
            c.row = e.at("row").get<Index>();
            c.col = e.at("col").get<Index>();
            const auto pol = e.at("polarity").get<std::string>();
            if (pol != "pos" && pol != "neg") protocol_error("polarity must be pos or neg", body);
            c.polarity = pol == "pos" ? Polarity::positive : Polarity::negative;
            if (e.contains("radius")) c.radius_hint = e["radius"].get<double>();
            prompts.clicks.push_back(c);
        }
        if (j.contains("prior_b64")) prompts.prior = PriorHandle{"remote", base64_decode(j["prior_b64"].get<std::string>())};
        return {std::move(img), std::move(prompts)};
    } catch (const json::exception& e) {
        protocol_error(e.what(), body);
    } catch (const DataError& e) {
        protocol_error(e.what(), body);
    }
}

std::string encode_predict_response(const SegResult& result) {
    ordered_json j;
    ordered_json cands = ordered_json::array();
    for (const Candidate& c : result.candidates) {
        ordered_json e;
        e["mask_png_b64"] = base64_encode(encode_mask_png(c.mask));
        e["score"] = c.score;
        cands.push_back(e);
    }
    j["candidates"] = cands;
    j["prior_b64"] = base64_encode(result.prior.payload);
    return j.dump();
}

SegResult decode_predict_response(const std::string& body) {
    SegResult out;
    try {
        const json j = json::parse(body);
        const json& cands = j.at("candidates");
        if (!cands.is_array() || cands.empty()) protocol_error("response has no candidates", body);
        for (const auto& e : cands) {
            const json& score = e.at("score");
            if (!score.is_number()) protocol_error("candidate score is not a number", body);
            out.candidates.push_back({decode_mask_png(base64_decode(e.at("mask_png_b64").get<std::string>())),
                                      score.get<double>()});
        }
        out.prior = {"remote", base64_decode(j.at("prior_b64").get<std::string>())};
    } catch (const json::exception& e) {
        protocol_error(e.what(), body);
    } catch (const DataError& e) {
        protocol_error(e.what(), body);
    }
    return out;
}

RemoteSegmenter::RemoteSegmenter(std::string endpoint, RemoteOptions opts)
    : endpoint_(std::move(endpoint)), opts_(opts) {
    if (opts_.retries < 0) throw std::invalid_argument("retries must be non-negative");
}

SegResult RemoteSegmenter::predict(const Image& img, const PromptSet& prompts) const {
    if (prompts.prior && prompts.prior->tag != "remote") {
        throw InvalidPrior(fmt::format("prior tagged '{}' cannot be sent to a remote segmenter", prompts.prior->tag));
    }
    const std::string body = post_json(endpoint_, "/predict", encode_predict_request(img, prompts),
                                       opts_.timeout, opts_.retries);
    SegResult res = decode_predict_response(body);
    for (const Candidate& c : res.candidates) {
        if (c.mask.rows() != img.height || c.mask.cols() != img.width) {
            protocol_error("candidate mask does not match the image", body);
        }
    }
    return res;
}

SegResult FixedMaskSegmenter::predict(const Image& img, const PromptSet&) const {
    if (mask_.rows() != img.height || mask_.cols() != img.width) throw SegmenterError("fixed mask does not match image");
    SegResult out;
    out.candidates.push_back({mask_, 1.0});
    out.prior = {kTag, {}};
    return out;
}

std::string encode_act_request(const PolicyView& view) {
    ordered_json j;
    j["question"] = view.question;
    ordered_json transcript = ordered_json::array();
    for (std::size_t i = 0; i < view.transcript.size(); ++i) {
        ordered_json e;
        e["think"] = view.transcript[i].think;
        e["action_raw"] = view.transcript[i].action_raw;
        e["observation_png_b64"] =
            i < view.observations.size() ? base64_encode(encode_image_png(view.observations[i])) : std::string();
        transcript.push_back(e);
    }
    j["transcript"] = transcript;
    j["observation_png_b64"] = base64_encode(encode_image_png(view.observation));
    return j.dump();
}

Policy remote_policy(std::string endpoint, std::chrono::milliseconds timeout) {
    return [endpoint = std::move(endpoint), timeout](const PolicyView& view) {
        const std::string body = post_json(endpoint, "/act", encode_act_request(view), timeout, 0);
        try {
            const json j = json::parse(body);
            return j.at("output").get<std::string>();
        } catch (const json::exception& e) {
            throw ProtocolError(fmt::format("policy protocol: {}", e.what()), body);
        }
    };
}

struct MockSegmenterServer::Impl {
    std::shared_ptr<const Segmenter> backend;
    std::string tag;
    httplib::Server server;
    mutable std::mutex mu;
    std::vector<std::string> bodies;
};

MockSegmenterServer::MockSegmenterServer(std::shared_ptr<const Segmenter> backend, std::string backend_tag)
    : impl_(std::make_unique<Impl>()) {
    impl_->backend = std::move(backend);
    impl_->tag = std::move(backend_tag);
    impl_->server.Post("/predict", [impl = impl_.get()](const httplib::Request& req, httplib::Response& res) {
        {
            std::lock_guard lock(impl->mu);
            impl->bodies.push_back(req.body);
        }
        try {
            auto [img, prompts] = decode_predict_request(req.body);
            if (prompts.prior) prompts.prior->tag = impl->tag;
            res.set_content(encode_predict_response(impl->backend->predict(img, prompts)), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    });
}

MockSegmenterServer::~MockSegmenterServer() { stop(); }

int MockSegmenterServer::start(int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port("127.0.0.1");
    } else if (impl_->server.bind_to_port("127.0.0.1", port)) {
        port_ = port;
    } else {
        port_ = -1;
    }
    if (port_ < 0) throw TransportError(fmt::format("cannot bind 127.0.0.1:{}", port), "");
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void MockSegmenterServer::run(const std::string& host, int port) {
    port_ = port;
    if (!impl_->server.listen(host, port)) throw TransportError(fmt::format("cannot listen on {}:{}", host, port), "");
}

void MockSegmenterServer::stop() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockSegmenterServer::endpoint() const { return fmt::format("http://127.0.0.1:{}", port_); }

std::vector<std::string> MockSegmenterServer::received_bodies() const {
    std::lock_guard lock(impl_->mu);
    return impl_->bodies;
}

}  // namespace ibis
