// Live HTTP backends built on cpp-httplib. The test suite drives them only
// against a loopback server.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fauxcheck/error.hpp"
#include "fauxcheck/evidence.hpp"

namespace fauxcheck::evidence {

namespace {

std::string base64_encode(std::string_view bytes) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const auto n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += kAlphabet[n & 63];
    }
    if (i < bytes.size()) {
        auto n = static_cast<unsigned>(static_cast<unsigned char>(bytes[i])) << 16;
        if (i + 1 < bytes.size()) n |= static_cast<unsigned>(static_cast<unsigned char>(bytes[i + 1])) << 8;
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += i + 1 < bytes.size() ? kAlphabet[(n >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

// Splits "https://host:port/path?q" into ("https://host:port", "/path?q").
std::pair<std::string, std::string> split_origin(std::string_view url) {
    const auto sep = url.find("://");
    if (sep == std::string_view::npos) throw DataError("not an absolute URL: " + std::string(url));
    const auto path_start = url.find('/', sep + 3);
    if (path_start == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

bool is_remote(std::string_view ref) {
    return ref.starts_with("http://") || ref.starts_with("https://");
}

}  // namespace

HttpSearchClient::HttpSearchClient(std::string endpoint, std::string api_key)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {}

std::unique_ptr<HttpSearchClient> HttpSearchClient::from_environment() {
    const char* endpoint = std::getenv("FAUXCHECK_SEARCH_ENDPOINT");
    const char* key = std::getenv("FAUXCHECK_SEARCH_KEY");
    if (endpoint == nullptr || *endpoint == '\0') {
        throw ConfigError("FAUXCHECK_SEARCH_ENDPOINT is not set; use --offline or a search fixture");
    }
    return std::make_unique<HttpSearchClient>(endpoint, key ? key : "");
}

SearchResult HttpSearchClient::search(std::string_view image_ref) {
    nlohmann::json image;
    if (is_remote(image_ref)) {
        image["source"]["imageUri"] = std::string(image_ref);
    } else {
        std::ifstream in{std::string(image_ref), std::ios::binary};
        if (!in) throw DataError("cannot read image file: " + std::string(image_ref));
        std::ostringstream ss;
        ss << in.rdbuf();
        image["content"] = base64_encode(ss.str());
    }
    nlohmann::json body;
    body["requests"] = nlohmann::json::array(
        {{{"image", image}, {"features", {{{"type", "WEB_DETECTION"}, {"maxResults", kMaxPages}}}}}});

    auto [origin, path] = split_origin(endpoint_);
    if (!api_key_.empty()) path += (path.find('?') == std::string::npos ? "?key=" : "&key=") + api_key_;
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(20);
    client.set_read_timeout(60);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) throw ServiceError("search request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw ServiceError("search request returned HTTP " + std::to_string(res->status));
    return parse_web_detection_response(res->body);
}

HttpCrawler::HttpCrawler(int timeout_seconds) : timeout_seconds_(timeout_seconds) {}

PageContent HttpCrawler::fetch(std::string_view url) {
    auto [origin, path] = split_origin(url);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    auto res = client.Get(path);
    if (!res) throw ServiceError("page fetch failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw ServiceError("page fetch returned HTTP " + std::to_string(res->status));
    return extract_page_content(res->body);
}

}  // namespace fauxcheck::evidence
