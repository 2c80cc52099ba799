#include "fedhash/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "fedhash/errors.hpp"

namespace fedhash {

namespace fs = std::filesystem;

// --- In-memory -------------------------------------------------------------

namespace {

class MemoryChannel : public ClientChannel {
  public:
    explicit MemoryChannel(MemoryExchange* owner) : owner_(owner) {}

    WireMessage fetch_global(uint64_t round) override { return owner_->fetch(round); }
    void push_increment(const WireMessage& increment) override {
        owner_->push(serialize(increment));
    }

  private:
    MemoryExchange* owner_;
};

}  // namespace

void MemoryExchange::broadcast(const WireMessage& global) {
    std::lock_guard lock(mu_);
    globals_[global.round] = serialize(global);
    cv_.notify_all();
}

WireMessage MemoryExchange::fetch(uint64_t round) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return globals_.count(round) > 0; });
    return deserialize(globals_[round]);
}

void MemoryExchange::push(std::vector<uint8_t> bytes) {
    const WireMessage msg = deserialize(bytes);
    std::lock_guard lock(mu_);
    uploads_[{msg.round, msg.client_id}] = std::move(bytes);
    cv_.notify_all();
}

WireMessage MemoryExchange::collect(uint64_t round, uint64_t client_id) {
    std::unique_lock lock(mu_);
    const auto key = std::make_pair(round, client_id);
    cv_.wait(lock, [&] { return uploads_.count(key) > 0; });
    return deserialize(uploads_[key]);
}

std::unique_ptr<ClientChannel> MemoryExchange::make_channel() {
    return std::make_unique<MemoryChannel>(this);
}

// --- Filesystem --------------------------------------------------------------

namespace {

fs::path message_path(const std::string& root, MsgKind kind, uint64_t round, uint64_t client_id) {
    const fs::path dir = fs::path(root) / ("round_" + std::to_string(round));
    if (kind == MsgKind::GlobalParams) return dir / "global.ckpt";
    return dir / ("client_" + std::to_string(client_id) + ".inc");
}

std::atomic<uint64_t> g_tmp_counter{0};

}  // namespace

void fs_put(const std::string& root, const WireMessage& msg) {
    const fs::path target = message_path(root, msg.kind, msg.round, msg.client_id);
    fs::create_directories(target.parent_path());

    const uint64_t token = g_tmp_counter.fetch_add(1);
    const fs::path tmp = target.parent_path() /
                         (".tmp_" + std::to_string(::getpid()) + "_" + std::to_string(token));
    const std::vector<uint8_t> bytes = serialize(msg);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

WireMessage fs_get(const std::string& root, MsgKind kind, uint64_t round, uint64_t client_id,
                   uint64_t expected_digest, int timeout_ms) {
    const fs::path target = message_path(root, kind, round, client_id);
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (!fs::exists(target)) {
        if (timeout_ms == 0 || std::chrono::steady_clock::now() >= deadline) {
            throw NotReadyError("'" + target.string() + "' is not available yet");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    std::ifstream in(target, std::ios::binary);
    if (!in) throw NotReadyError("cannot open '" + target.string() + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    WireMessage msg;
    try {
        msg = deserialize(bytes);
    } catch (const FramingError& e) {
        throw CorruptCheckpointError("'" + target.string() + "': " + e.what());
    }
    if (expected_digest != 0 && msg.schema_digest != expected_digest) {
        throw CorruptCheckpointError("'" + target.string() + "': schema digest mismatch");
    }
    return msg;
}

namespace {

class FsChannel : public ClientChannel {
  public:
    FsChannel(std::string root, uint64_t digest, int timeout_ms)
        : root_(std::move(root)), digest_(digest), timeout_ms_(timeout_ms) {}

    WireMessage fetch_global(uint64_t round) override {
        return fs_get(root_, MsgKind::GlobalParams, round, 0, digest_, timeout_ms_);
    }
    void push_increment(const WireMessage& increment) override { fs_put(root_, increment); }

  private:
    std::string root_;
    uint64_t digest_;
    int timeout_ms_;
};

}  // namespace

FsExchange::FsExchange(std::string root, uint64_t expected_digest, int timeout_ms)
    : root_(std::move(root)), digest_(expected_digest), timeout_ms_(timeout_ms) {
    fs::create_directories(root_);
}

void FsExchange::broadcast(const WireMessage& global) {
    fs_put(root_, global);
}

WireMessage FsExchange::collect(uint64_t round, uint64_t client_id) {
    return fs_get(root_, MsgKind::Increment, round, client_id, digest_, timeout_ms_);
}

std::unique_ptr<ClientChannel> FsExchange::make_channel() {
    return std::make_unique<FsChannel>(root_, digest_, timeout_ms_);
}

// --- Loopback socket ---------------------------------------------------------

namespace {

void write_all(int fd, const uint8_t* data, size_t len) {
    size_t sent = 0;
    while (sent < len) {
        const ssize_t n = ::send(fd, data + sent, len - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw FramingError(std::string("socket send failed: ") + std::strerror(errno));
        }
        sent += static_cast<size_t>(n);
    }
}

void read_all(int fd, uint8_t* data, size_t len) {
    size_t got = 0;
    while (got < len) {
        const ssize_t n = ::recv(fd, data + got, len - got, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw FramingError(std::string("socket recv failed: ") + std::strerror(errno));
        }
        if (n == 0) throw FramingError("connection closed mid-frame");
        got += static_cast<size_t>(n);
    }
}

struct FdGuard {
    int fd;
    ~FdGuard() {
        if (fd >= 0) ::close(fd);
    }
};

}  // namespace

void send_frame(int fd, const std::vector<uint8_t>& bytes) {
    uint8_t prefix[4];
    const uint32_t len = static_cast<uint32_t>(bytes.size());
    for (int i = 0; i < 4; ++i) prefix[i] = static_cast<uint8_t>(len >> (8 * i));
    write_all(fd, prefix, 4);
    write_all(fd, bytes.data(), bytes.size());
}

std::vector<uint8_t> recv_frame(int fd, size_t max_frame) {
    uint8_t prefix[4];
    read_all(fd, prefix, 4);
    uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(prefix[i]) << (8 * i);
    if (len > max_frame) {
        throw FramingError("frame of " + std::to_string(len) + " bytes exceeds the " +
                           std::to_string(max_frame) + " byte limit");
    }
    std::vector<uint8_t> bytes(len);
    read_all(fd, bytes.data(), len);
    return bytes;
}

SocketExchange::SocketExchange(uint64_t expected_digest, uint16_t port, size_t max_frame)
    : digest_(expected_digest), max_frame_(max_frame) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error("cannot create listen socket");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listen_fd_);
        throw Error(std::string("bind failed: ") + std::strerror(errno));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    if (::listen(listen_fd_, 64) != 0) {
        ::close(listen_fd_);
        throw Error(std::string("listen failed: ") + std::strerror(errno));
    }
    acceptor_ = std::thread([this] { acceptor_loop(); });
}

SocketExchange::~SocketExchange() {
    {
        std::lock_guard lock(mu_);
        shutdown_ = true;
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    for (auto& t : sessions_) {
        if (t.joinable()) t.join();
    }
}

void SocketExchange::acceptor_loop() {
    for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            std::lock_guard lock(mu_);
            if (shutdown_) return;
            if (errno == EINTR) continue;
            return;
        }
        std::lock_guard lock(mu_);
        if (shutdown_) {
            ::close(fd);
            return;
        }
        sessions_.emplace_back([this, fd] { handle_session(fd); });
    }
}

void SocketExchange::handle_session(int fd) {
    FdGuard guard{fd};
    try {
        const WireMessage hello = deserialize(recv_frame(fd, max_frame_));
        if (hello.kind != MsgKind::Hello || hello.schema_digest != digest_) {
            return;  // refuse: close without a reply
        }
        std::vector<uint8_t> global_bytes;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return shutdown_ || globals_.count(hello.round) > 0; });
            if (shutdown_) return;
            global_bytes = globals_[hello.round];
        }
        send_frame(fd, global_bytes);

        std::vector<uint8_t> inc_bytes = recv_frame(fd, max_frame_);
        const WireMessage inc = deserialize(inc_bytes);
        if (inc.kind != MsgKind::Increment || inc.schema_digest != digest_) {
            return;
        }
        {
            std::lock_guard lock(mu_);
            uploads_[{inc.round, inc.client_id}] = std::move(inc_bytes);
            cv_.notify_all();
        }
        WireMessage ack;
        ack.kind = MsgKind::Ack;
        ack.round = inc.round;
        ack.client_id = inc.client_id;
        ack.schema_digest = digest_;
        send_frame(fd, serialize(ack));
    } catch (const Error&) {
        // drop the session; the client sees a closed connection
    }
}

void SocketExchange::broadcast(const WireMessage& global) {
    std::lock_guard lock(mu_);
    globals_[global.round] = serialize(global);
    cv_.notify_all();
}

WireMessage SocketExchange::collect(uint64_t round, uint64_t client_id) {
    std::unique_lock lock(mu_);
    const auto key = std::make_pair(round, client_id);
    cv_.wait(lock, [&] { return uploads_.count(key) > 0; });
    return deserialize(uploads_[key]);
}

SocketChannel::SocketChannel(std::string host, uint16_t port, size_t max_frame)
    : host_(std::move(host)), port_(port), max_frame_(max_frame) {}

WireMessage SocketChannel::fetch_global(uint64_t round) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error("cannot create client socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port_);
    if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        fd_ = -1;
        throw ConfigError("transport.addr", "bad IPv4 address '" + host_ + "'");
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw Error(std::string("connect failed: ") + std::strerror(errno));
    }
    WireMessage hello;
    hello.kind = MsgKind::Hello;
    hello.round = round;
    hello.client_id = client_id;
    hello.schema_digest = digest;
    try {
        send_frame(fd_, serialize(hello));
        const WireMessage global = deserialize(recv_frame(fd_, max_frame_));
        if (global.kind != MsgKind::GlobalParams) {
            throw ProtocolError("expected global parameters from the server");
        }
        return global;
    } catch (const FramingError& e) {
        ::close(fd_);
        fd_ = -1;
        throw ProtocolError(std::string("server refused the session: ") + e.what());
    }
}

void SocketChannel::push_increment(const WireMessage& increment) {
    if (fd_ < 0) throw ProtocolError("push_increment without an open session");
    FdGuard guard{fd_};
    fd_ = -1;
    send_frame(guard.fd, serialize(increment));
    const WireMessage ack = deserialize(recv_frame(guard.fd, max_frame_));
    if (ack.kind != MsgKind::Ack) {
        throw ProtocolError("expected an ack from the server");
    }
}

}  // namespace fedhash
