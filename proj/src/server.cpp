#include "netoas/server.hpp"

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

#include "netoas/protocol.hpp"
#include "netoas/session.hpp"
#include "netoas/user_store.hpp"

namespace netoas {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Connection;

// Counts live analysis workers so shutdown can wait for them before tearing down the io_context.
struct WorkerCounter {
    std::mutex m;
    std::condition_variable cv;
    int active = 0;
    std::vector<std::weak_ptr<Connection>> connections;
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, const ServerOptions& opts, WorkerCounter& workers)
        : ws_(std::move(socket)), opts_(opts), workers_(workers), queue_(4, true) {}

    void run() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(beast::bind_front_handler(&Connection::on_accept, shared_from_this()));
    }

    // Called from any thread.
    void send(std::string text) {
        asio::post(ws_.get_executor(), [self = shared_from_this(), t = std::move(text)]() mutable {
            self->outbox_.push_back(std::move(t));
            if (self->outbox_.size() == 1) self->write_next();
        });
    }

    void shutdown() {
        queue_.close();
        asio::post(ws_.get_executor(), [self = shared_from_this()] {
            beast::error_code ec;
            beast::get_lowest_layer(self->ws_).socket().close(ec);
        });
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        read_next();
    }

    void read_next() {
        ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            queue_.close();
            return;
        }
        try {
            if (ws_.got_text()) {
                const auto cmd = parse_client_text(beast::buffers_to_string(buffer_.data()));
                if (cmd.type == ClientCommand::Type::Start) start_session(cmd);
                else queue_.close();
            } else {
                if (!started_) throw ContractViolation("FRAME before start");
                const auto data = buffer_.data();
                const auto* p = static_cast<const std::uint8_t*>(data.data());
                queue_.push(decode_frame({p, data.size()}));
            }
        } catch (const std::exception& e) {
            send(error_message(e.what()));
        }
        buffer_.consume(buffer_.size());
        read_next();
    }

    void start_session(const ClientCommand& cmd) {
        if (started_) throw ContractViolation("session already started");
        if (!cmd.user.empty() && !UserStore::valid_id(cmd.user)) throw ContractViolation("invalid user id");
        started_ = true;
        user_ = cmd.user;
        {
            std::lock_guard lk(workers_.m);
            ++workers_.active;
        }
        std::thread([self = shared_from_this()] { self->analyse(); }).detach();
    }

    void analyse() {
        try {
            SessionEngine engine(opts_.calib, opts_.fps, opts_.seed);
            const auto max_frames = static_cast<std::uint64_t>(std::llround(opts_.duration_s * opts_.fps));
            while (engine.frames() < max_frames) {
                auto f = queue_.pop();
                if (!f) break;
                const auto out = engine.process(*f);
                if (out.target_changed && out.state.led_id) send(target_message(*out.state.led_id));
                if (out.fsm_ready) send(state_message(out.seq, out.state));
                for (const auto& m : out.feedback) send(warning_message(m));
            }
            queue_.close();
            engine.finish();
            const auto f = extract_features(engine.log(), opts_.calib.jerk_curvature_thresh);
            std::optional<Prediction> verdict;
            if (opts_.model) verdict = predict(*opts_.model, f);
            const auto syn = render_synopsis(engine.log(), f, verdict);
            if (!user_.empty() && !opts_.user_store.empty()) {
                UserStore store(opts_.user_store);
                if (!store.has_user(user_)) store.create_user(user_, user_);
                store.append_synopsis(user_, syn.report);
            }
            send(synopsis_message(syn));
        } catch (const std::exception& e) {
            queue_.close();
            send(error_message(e.what()));
        }
        std::lock_guard lk(workers_.m);
        --workers_.active;
        workers_.cv.notify_all();
    }

    void write_next() {
        ws_.text(true);
        ws_.async_write(asio::buffer(outbox_.front()),
                        beast::bind_front_handler(&Connection::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            outbox_.clear();
            return;
        }
        outbox_.pop_front();
        if (!outbox_.empty()) write_next();
    }

    websocket::stream<beast::tcp_stream> ws_;
    const ServerOptions& opts_;
    WorkerCounter& workers_;
    FrameQueue queue_;
    beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
    bool started_ = false;
    std::string user_;
};

}  // namespace

struct Server::Impl {
    ServerOptions opts;
    asio::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::thread io_thread;
    WorkerCounter workers;
    std::mutex m;
    std::condition_variable cv;
    bool stopped = false;

    void accept() {
        acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            auto c = std::make_shared<Connection>(std::move(socket), opts, workers);
            {
                std::lock_guard lk(workers.m);
                workers.connections.push_back(c);
            }
            c->run();
            accept();
        });
    }
};

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>()) {
    options.calib.validate();
    if (options.fps != 25 && options.fps != 50) throw ContractViolation("fps must be 25 or 50");
    impl_->opts = std::move(options);
}

Server::~Server() { stop(); }

unsigned short Server::start() {
    auto& I = *impl_;
    const tcp::endpoint ep(asio::ip::make_address(I.opts.address), I.opts.port);
    I.acceptor.open(ep.protocol());
    I.acceptor.set_option(asio::socket_base::reuse_address(true));
    I.acceptor.bind(ep);
    I.acceptor.listen(asio::socket_base::max_listen_connections);
    I.accept();
    I.io_thread = std::thread([&I] {
        auto guard = asio::make_work_guard(I.ioc);
        I.ioc.run();
    });
    return I.acceptor.local_endpoint().port();
}

void Server::wait() {
    std::unique_lock lk(impl_->m);
    impl_->cv.wait(lk, [&] { return impl_->stopped; });
}

void Server::stop() {
    auto& I = *impl_;
    {
        std::lock_guard lk(I.m);
        if (I.stopped) return;
        I.stopped = true;
    }
    I.cv.notify_all();
    asio::post(I.ioc, [&I] {
        beast::error_code ec;
        I.acceptor.close(ec);
    });
    std::vector<std::shared_ptr<Connection>> live;
    {
        std::unique_lock lk(I.workers.m);
        for (auto& w : I.workers.connections)
            if (auto c = w.lock()) live.push_back(c);
    }
    for (auto& c : live) c->shutdown();
    live.clear();
    {
        std::unique_lock lk(I.workers.m);
        I.workers.cv.wait_for(lk, std::chrono::seconds(10), [&] { return I.workers.active == 0; });
    }
    I.ioc.stop();
    if (I.io_thread.joinable()) I.io_thread.join();
}

}  // namespace netoas
