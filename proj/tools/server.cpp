#include "server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <chrono>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace maggait::cli {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

std::vector<ScenarioEntry> list_scenarios(const std::filesystem::path& dir) {
    std::vector<ScenarioEntry> out;
    std::error_code ec;
    if (dir.empty() || !std::filesystem::is_directory(dir, ec)) return out;
    for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
        if (!e.is_regular_file() || e.path().extension() != ".json") continue;
        ScenarioEntry s{e.path().stem().string(), "", e.path()};
        if (!valid_scenario_id(s.id)) continue;
        try {
            s.description = read_json_file(e.path().string()).value("description", "");
        } catch (const std::exception&) {
            continue;
        }
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

bool valid_scenario_id(const std::string& id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-';
    });
}

namespace {

std::map<std::string, std::string> parse_query(std::string_view q) {
    std::map<std::string, std::string> out;
    while (!q.empty()) {
        const auto amp = q.find('&');
        const std::string_view part = q.substr(0, amp);
        const auto eq = part.find('=');
        out[std::string(part.substr(0, eq))] =
            eq == std::string_view::npos ? "" : std::string(part.substr(eq + 1));
        if (amp == std::string_view::npos) break;
        q.remove_prefix(amp + 1);
    }
    return out;
}

std::string mime_type(const std::filesystem::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".html") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    return "application/octet-stream";
}

using Response = http::response<http::string_body>;

Response make_response(const http::request<http::string_body>& req, http::status status,
                       std::string body, const std::string& type = "application/json") {
    Response res{status, req.version()};
    res.set(http::field::server, "maggait");
    res.set(http::field::content_type, type);
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
}

std::string error_body(const std::string& reason) {
    return json{{"schema_version", kSchemaVersion}, {"error", reason}}.dump();
}

} // namespace

class WsConn;

struct TeleopServer::Impl {
    explicit Impl(ServerOptions o) : options(std::move(o)), acceptor(ioc), timer(ioc), signals(ioc) {}

    struct Hub {
        std::unique_ptr<Session> session;
        std::map<int, std::shared_ptr<WsConn>> conns;
    };

    // Resolves the WebSocket target to a scenario id or an error message.
    std::pair<std::string, std::string> session_target(std::string_view target) const;
    Scenario load(const std::string& id) const;
    Response respond(const http::request<http::string_body>& req) const;
    void upgrade(tcp::socket socket, http::request<http::string_body> req, std::string scenario);
    void on_open(const std::shared_ptr<WsConn>& c);
    void on_message(const std::shared_ptr<WsConn>& c, std::string text);
    void on_close(const std::shared_ptr<WsConn>& c);
    void accept();
    void schedule_tick();
    void tick();
    void shutdown();

    ServerOptions options;
    net::io_context ioc;
    tcp::acceptor acceptor;
    net::steady_timer timer;
    net::signal_set signals;
    std::chrono::steady_clock::time_point last_tick;
    std::map<std::string, Hub> hubs;
    int next_id = 1;
    bool stopping = false;
};

class HttpConn : public std::enable_shared_from_this<HttpConn> {
public:
    HttpConn(tcp::socket s, TeleopServer::Impl& srv) : stream_(std::move(s)), srv_(srv) {}

    void start() { read(); }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buf_, req_,
                         [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            beast::error_code ignored;
            stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
            return;
        }
        if (websocket::is_upgrade(req_)) {
            auto [id, err] = srv_.session_target(std::string_view(req_.target().data(), req_.target().size()));
            if (err.empty()) {
                stream_.expires_never();
                srv_.upgrade(stream_.release_socket(), std::move(req_), id);
                return;
            }
            send(make_response(req_, http::status::not_found, error_body(err)));
            return;
        }
        send(srv_.respond(req_));
    }

    void send(Response res) {
        auto sp = std::make_shared<Response>(std::move(res));
        http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (sp->need_eof()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buf_;
    http::request<http::string_body> req_;
    TeleopServer::Impl& srv_;
};

class WsConn : public std::enable_shared_from_this<WsConn> {
public:
    WsConn(tcp::socket s, TeleopServer::Impl& srv, int id, std::string scenario)
        : ws_(std::move(s)), srv_(srv), id_(id), scenario_(std::move(scenario)) {}

    int id() const { return id_; }
    const std::string& scenario() const { return scenario_; }

    void start(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->open_ = true;
            self->srv_.on_open(self);
            self->read();
        });
    }

    /// Droppable messages (telemetry) are skipped when the client lags.
    void send(std::string text, bool droppable = false) {
        if (!open_) return;
        if (droppable && queue_.size() > 32) return;
        queue_.push_back(std::move(text));
        if (!writing_) write_next();
    }

    void close() {
        if (!open_) return;
        open_ = false;
        ws_.async_close(websocket::close_code::going_away,
                        [self = shared_from_this()](beast::error_code) {});
    }

private:
    void read() {
        ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->open_ = false;
                self->srv_.on_close(self);
                return;
            }
            std::string text = beast::buffers_to_string(self->buf_.data());
            self->buf_.consume(self->buf_.size());
            self->srv_.on_message(self, std::move(text));
            self->read();
        });
    }

    void write_next() {
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->queue_.pop_front();
            if (ec) {
                self->queue_.clear();
                self->writing_ = false;
                return;
            }
            if (self->queue_.empty())
                self->writing_ = false;
            else
                self->write_next();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buf_;
    std::deque<std::string> queue_;
    bool writing_ = false;
    bool open_ = false;
    TeleopServer::Impl& srv_;
    int id_;
    std::string scenario_;
};

std::pair<std::string, std::string> TeleopServer::Impl::session_target(std::string_view target) const {
    const auto q = target.find('?');
    if (target.substr(0, q) != "/session") return {"", "unknown endpoint"};
    auto params = q == std::string_view::npos ? std::map<std::string, std::string>{}
                                              : parse_query(target.substr(q + 1));
    std::string id = params.count("scenario") ? params["scenario"] : "";
    const auto entries = list_scenarios(options.scenario_dir);
    if (id.empty()) {
        if (entries.empty()) return {"", "no scenarios available"};
        id = entries.front().id;
        for (const auto& e : entries)
            if (e.id == "straight_walk") id = e.id;
    }
    const bool known = std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.id == id; });
    if (!known) return {"", "unknown scenario '" + id + "'"};
    return {id, ""};
}

Scenario TeleopServer::Impl::load(const std::string& id) const {
    if (!valid_scenario_id(id)) throw ArgumentError("invalid scenario id '" + id + "'");
    const auto path = options.scenario_dir / (id + ".json");
    if (!std::filesystem::is_regular_file(path)) throw ArgumentError("unknown scenario '" + id + "'");
    try {
        return load_scenario(path.string(), options.base_config);
    } catch (const ConfigError& e) {
        throw ArgumentError(std::string("scenario '") + id + "': " + e.what());
    }
}

Response TeleopServer::Impl::respond(const http::request<http::string_body>& req) const {
    if (req.method() != http::verb::get && req.method() != http::verb::head)
        return make_response(req, http::status::method_not_allowed, error_body("only GET is supported"));
    const std::string_view target(req.target().data(), req.target().size());
    const std::string_view path = target.substr(0, target.find('?'));
    if (path == "/healthz") {
        const json body = {{"schema_version", kSchemaVersion},
                           {"status", "ok"},
                           {"version", kVersion},
                           {"sessions", hubs.size()}};
        return make_response(req, http::status::ok, body.dump());
    }
    if (path == "/scenarios") {
        json list = json::array();
        for (const auto& e : list_scenarios(options.scenario_dir))
            list.push_back({{"id", e.id}, {"description", e.description}});
        return make_response(req, http::status::ok,
                             json{{"schema_version", kSchemaVersion}, {"scenarios", list}}.dump());
    }
    if (!options.static_dir.empty()) {
        std::string rel(path.substr(1));
        if (rel.empty()) rel = "index.html";
        if (rel.find("..") == std::string::npos) {
            const auto file = options.static_dir / rel;
            std::ifstream in(file, std::ios::binary);
            if (in) {
                std::ostringstream ss;
                ss << in.rdbuf();
                return make_response(req, http::status::ok, ss.str(), mime_type(file));
            }
        }
    }
    return make_response(req, http::status::not_found, error_body("not found"));
}

void TeleopServer::Impl::upgrade(tcp::socket socket, http::request<http::string_body> req,
                                 std::string scenario) {
    auto c = std::make_shared<WsConn>(std::move(socket), *this, next_id++, std::move(scenario));
    c->start(std::move(req));
}

void TeleopServer::Impl::on_open(const std::shared_ptr<WsConn>& c) {
    auto it = hubs.find(c->scenario());
    if (it == hubs.end()) {
        try {
            Hub hub;
            hub.session = std::make_unique<Session>(c->scenario(), load(c->scenario()), options.teleop,
                                                    [this](const std::string& id) { return load(id); });
            it = hubs.emplace(c->scenario(), std::move(hub)).first;
        } catch (const std::exception& e) {
            c->send(json{{"type", "error"}, {"schema_version", kSchemaVersion}, {"seq", nullptr},
                         {"reason", e.what()}}
                        .dump());
            c->close();
            return;
        }
    }
    it->second.conns[c->id()] = c;
    c->send(it->second.session->attach(c->id()).dump());
    c->send(it->second.session->state().dump());
}

void TeleopServer::Impl::on_message(const std::shared_ptr<WsConn>& c, std::string text) {
    auto it = hubs.find(c->scenario());
    if (it == hubs.end()) return;
    it->second.session->enqueue(c->id(), text);
}

void TeleopServer::Impl::on_close(const std::shared_ptr<WsConn>& c) {
    auto it = hubs.find(c->scenario());
    if (it == hubs.end()) return;
    it->second.session->detach(c->id());
    it->second.conns.erase(c->id());
    if (it->second.conns.empty()) hubs.erase(it);
}

void TeleopServer::Impl::accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket s) {
        if (ec) {
            if (!acceptor.is_open()) return;
        } else {
            std::make_shared<HttpConn>(std::move(s), *this)->start();
        }
        accept();
    });
}

void TeleopServer::Impl::schedule_tick() {
    const auto period = std::chrono::duration<double>(1.0 / options.teleop.telemetry_hz);
    timer.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(period));
    timer.async_wait([this](beast::error_code ec) {
        if (ec || stopping) return;
        tick();
        schedule_tick();
    });
}

void TeleopServer::Impl::tick() {
    const auto now = std::chrono::steady_clock::now();
    const double wall_dt = std::chrono::duration<double>(now - last_tick).count();
    last_tick = now;
    for (auto& [id, hub] : hubs) {
        std::vector<Outgoing> replies;
        try {
            replies = hub.session->tick(wall_dt);
        } catch (const std::exception& e) {
            std::cerr << "session '" << id << "': " << e.what() << '\n';
        }
        for (const auto& r : replies) {
            auto c = hub.conns.find(r.connection);
            if (c != hub.conns.end()) c->second->send(r.message.dump());
        }
        const std::string state = hub.session->state().dump();
        for (auto& [cid, conn] : hub.conns) conn->send(state, true);
    }
}

void TeleopServer::Impl::shutdown() {
    stopping = true;
    beast::error_code ignored;
    acceptor.close(ignored);
    timer.cancel();
    signals.cancel(ignored);
    for (auto& [id, hub] : hubs)
        for (auto& [cid, conn] : hub.conns) conn->close();
    // Let the close frames go out, then stop.
    auto t = std::make_shared<net::steady_timer>(ioc, std::chrono::milliseconds(100));
    t->async_wait([this, t](beast::error_code) { ioc.stop(); });
}

TeleopServer::TeleopServer(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
    require(impl_->options.teleop.telemetry_hz > 0.0, "telemetry rate must be positive");
}

TeleopServer::~TeleopServer() = default;

unsigned short TeleopServer::bind() {
    auto& a = impl_->acceptor;
    const tcp::endpoint ep(net::ip::make_address(impl_->options.host), impl_->options.port);
    a.open(ep.protocol());
    a.set_option(net::socket_base::reuse_address(true));
    a.bind(ep);
    a.listen(net::socket_base::max_listen_connections);
    return a.local_endpoint().port();
}

void TeleopServer::run() {
    if (!impl_->acceptor.is_open()) bind();
    if (impl_->options.handle_signals) {
        impl_->signals.add(SIGINT);
        impl_->signals.add(SIGTERM);
        impl_->signals.async_wait([this](beast::error_code ec, int) {
            if (!ec) impl_->shutdown();
        });
    }
    impl_->last_tick = std::chrono::steady_clock::now();
    impl_->accept();
    impl_->schedule_tick();
    impl_->ioc.run();
}

void TeleopServer::stop() {
    net::post(impl_->ioc, [this] { impl_->shutdown(); });
}

} // namespace maggait::cli
