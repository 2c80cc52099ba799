#pragma once

// Three interchangeable channels moving wire messages between clients and
// the server: in-memory queues, filesystem checkpoints, and a
// length-prefixed loopback socket protocol. All three carry identical bytes;
// upload metering counts serialized message sizes only, so the choice of
// transport never changes a result.

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fedhash/wire.hpp"

namespace fedhash {

inline constexpr size_t kDefaultMaxFrame = 64ull << 20;  // 64 MiB

// Server-side view of one run's message flow.
class Exchange {
  public:
    virtual ~Exchange() = default;
    // Publish the global parameters for the round carried by the message.
    virtual void broadcast(const WireMessage& global) = 0;
    // Block until the given client's increment for the given round arrives.
    virtual WireMessage collect(uint64_t round, uint64_t client_id) = 0;
};

// Client-side view. fetch_global blocks until the round's broadcast is
// available; push_increment hands the trained increment back.
class ClientChannel {
  public:
    virtual ~ClientChannel() = default;
    virtual WireMessage fetch_global(uint64_t round) = 0;
    virtual void push_increment(const WireMessage& increment) = 0;
};

// --- In-memory -----------------------------------------------------------

class MemoryExchange : public Exchange {
  public:
    void broadcast(const WireMessage& global) override;
    WireMessage collect(uint64_t round, uint64_t client_id) override;

    std::unique_ptr<ClientChannel> make_channel();

    // Client-side primitives, used by the channels.
    WireMessage fetch(uint64_t round);
    void push(std::vector<uint8_t> bytes);

  private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::map<uint64_t, std::vector<uint8_t>> globals_;                        // round -> bytes
    std::map<std::pair<uint64_t, uint64_t>, std::vector<uint8_t>> uploads_;  // (round, client)
};

// --- Filesystem ------------------------------------------------------------
//
// Layout under the exchange root:
//   round_{t}/global.ckpt   broadcast global parameters
//   round_{t}/client_{i}.inc  one client's increment
// Writes go to a unique temp file in the target directory and are renamed
// into place, so a reader never observes a torn file.

// Stores a message at its canonical path.
void fs_put(const std::string& root, const WireMessage& msg);

// Loads the message for (kind, round, client_id). Missing file: throws
// NotReadyError when timeout_ms == 0, otherwise polls until the deadline and
// then throws NotReadyError. A digest mismatch against expected_digest (when
// nonzero) or an unparsable file throws CorruptCheckpointError.
WireMessage fs_get(const std::string& root, MsgKind kind, uint64_t round, uint64_t client_id,
                   uint64_t expected_digest, int timeout_ms);

class FsExchange : public Exchange {
  public:
    FsExchange(std::string root, uint64_t expected_digest, int timeout_ms = 30000);

    void broadcast(const WireMessage& global) override;
    WireMessage collect(uint64_t round, uint64_t client_id) override;

    std::unique_ptr<ClientChannel> make_channel();

  private:
    std::string root_;
    uint64_t digest_;
    int timeout_ms_;
};

// --- Loopback socket -------------------------------------------------------
//
// Frames are a u32 little-endian length prefix followed by one serialized
// message; frames longer than max_frame are rejected before allocation.
// Session, one connection per client per round:
//   client HELLO(round, client, digest) -> server GLOBAL_PARAMS
//   -> client INCREMENT -> server ACK
// The server refuses a HELLO whose digest it does not expect by closing the
// connection.

void send_frame(int fd, const std::vector<uint8_t>& bytes);
std::vector<uint8_t> recv_frame(int fd, size_t max_frame = kDefaultMaxFrame);

class SocketExchange : public Exchange {
  public:
    // Binds and listens on 127.0.0.1; port 0 picks an ephemeral port.
    SocketExchange(uint64_t expected_digest, uint16_t port = 0,
                   size_t max_frame = kDefaultMaxFrame);
    ~SocketExchange() override;

    uint16_t port() const { return port_; }

    void broadcast(const WireMessage& global) override;
    WireMessage collect(uint64_t round, uint64_t client_id) override;

  private:
    void acceptor_loop();
    void handle_session(int fd);

    uint64_t digest_;
    size_t max_frame_;
    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::thread acceptor_;
    std::vector<std::thread> sessions_;

    std::mutex mu_;
    std::condition_variable cv_;
    bool shutdown_ = false;
    std::map<uint64_t, std::vector<uint8_t>> globals_;
    std::map<std::pair<uint64_t, uint64_t>, std::vector<uint8_t>> uploads_;
};

class SocketChannel : public ClientChannel {
  public:
    SocketChannel(std::string host, uint16_t port, size_t max_frame = kDefaultMaxFrame);

    WireMessage fetch_global(uint64_t round) override;
    void push_increment(const WireMessage& increment) override;

    // Digest announced in HELLO; set before fetch_global.
    uint64_t digest = 0;
    uint64_t client_id = 0;

  private:
    std::string host_;
    uint16_t port_;
    size_t max_frame_;
    int fd_ = -1;
};

}  // namespace fedhash
