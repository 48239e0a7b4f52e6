#pragma once

#include <bit>
#include <cmath>
#include <optional>
#include <cerrno>
#include <csignal>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "steerkit/codec.hpp"
#include "steerkit/ddpm.hpp"
#include "steerkit/denoisers.hpp"
#include "steerkit/error.hpp"
#include "steerkit/grid.hpp"

// Client side of the denoiser bridge: a length-prefixed binary protocol,
// little-endian throughout.
//
//   frame   = "SMBR" | version u16 | type u16 | payload_len u64 | payload
//   tensor  = ndim u32 | dims u32 x ndim | f32 data, row-major
//   INIT     client -> server   image_rows u32 | image_cols u32
//   INIT_ACK server -> client   T u32 | beta f64 x T | latent_channels u32 | latent_rows u32 |
//                               latent_cols u32 | scale_factor u32 | prediction (0 eps, 1 v) u32
//   ENCODE   tensor (3 x H x W image)                 -> RESPONSE tensor (latent)
//   DECODE   tensor (latent)                          -> RESPONSE tensor (3 x H x W image)
//   PREDICT  timestep u32 | x_t tensor | rgb tensor   -> RESPONSE tensor (prediction)
//   ERROR    UTF-8 message, may answer any request
//   SHUTDOWN empty, no reply
namespace steerkit::bridge {

inline constexpr char magic[4] = {'S', 'M', 'B', 'R'};
inline constexpr std::uint16_t protocol_version = 1;
inline constexpr std::size_t header_size = 16;
inline constexpr std::uint64_t default_max_payload = std::uint64_t(1) << 32;

enum class MsgType : std::uint16_t {
    init = 1,
    init_ack = 2,
    encode = 3,
    decode = 4,
    predict = 5,
    response = 6,
    error = 7,
    shutdown = 8,
};

inline std::string to_string(MsgType t) {
    switch (t) {
        case MsgType::init: return "INIT";
        case MsgType::init_ack: return "INIT_ACK";
        case MsgType::encode: return "ENCODE";
        case MsgType::decode: return "DECODE";
        case MsgType::predict: return "PREDICT";
        case MsgType::response: return "RESPONSE";
        case MsgType::error: return "ERROR";
        case MsgType::shutdown: return "SHUTDOWN";
    }
    return "type " + std::to_string(static_cast<unsigned>(t));
}

struct Frame {
    MsgType type = MsgType::error;
    std::vector<std::uint8_t> payload;
};

class Writer {
public:
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::vector<std::uint8_t>& data() { return buf_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::size_t remaining() const { return b_.size() - pos_; }
    const std::uint8_t* cursor() const { return b_.data() + pos_; }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }
    void expect_end(const char* what) const {
        require(remaining() == 0, ErrorCode::protocol,
                std::string(what) + ": " + std::to_string(remaining()) + " trailing bytes");
    }

private:
    void need(std::size_t n) const {
        require(remaining() >= n, ErrorCode::protocol, "payload truncated");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= std::uint64_t(b_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> encode_frame(MsgType type, const std::vector<std::uint8_t>& payload) {
    Writer w;
    w.bytes(magic, 4);
    w.u16(protocol_version);
    w.u16(static_cast<std::uint16_t>(type));
    w.u64(payload.size());
    w.bytes(payload.data(), payload.size());
    return std::move(w.data());
}

inline void write_tensor(Writer& w, const Planes& t) {
    w.u32(3);
    w.u32(static_cast<std::uint32_t>(t.channels()));
    w.u32(static_cast<std::uint32_t>(t.rows()));
    w.u32(static_cast<std::uint32_t>(t.cols()));
    for (double v : t.values()) w.f32(static_cast<float>(v));
}

// Accepts ndim 2 (one channel) or 3 (C x H x W).
inline Planes read_tensor(Reader& r) {
    const std::uint32_t ndim = r.u32();
    require(ndim == 2 || ndim == 3, ErrorCode::protocol, "tensor has " + std::to_string(ndim) + " dims, expected 2 or 3");
    std::uint32_t dims[3] = {1, 0, 0};
    for (std::uint32_t i = 0; i < ndim; ++i) dims[3 - ndim + i] = r.u32();
    const std::uint64_t count = std::uint64_t(dims[0]) * dims[1] * dims[2];
    require(dims[0] <= (1u << 16) && dims[1] <= (1u << 20) && dims[2] <= (1u << 20) && count <= (1ull << 30),
            ErrorCode::protocol, "tensor dims too large");
    require(r.remaining() >= count * 4, ErrorCode::protocol,
            "tensor needs " + std::to_string(count * 4) + " data bytes, " + std::to_string(r.remaining()) + " left");
    Planes out(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
    for (double& v : out.values()) v = r.f32();
    return out;
}

inline std::vector<std::uint8_t> tensor_payload(const Planes& t) {
    Writer w;
    write_tensor(w, t);
    return std::move(w.data());
}

inline Planes tensor_from_payload(const std::vector<std::uint8_t>& p, const char* what) {
    Reader r(p);
    Planes t = read_tensor(r);
    r.expect_end(what);
    return t;
}

struct InitAck {
    std::vector<double> betas;
    int latent_channels = 0;
    int latent_rows = 0;
    int latent_cols = 0;
    int scale_factor = 1;
    PredictionKind kind = PredictionKind::v;
};

inline std::vector<std::uint8_t> init_ack_payload(const InitAck& a) {
    Writer w;
    w.u32(static_cast<std::uint32_t>(a.betas.size()));
    for (double b : a.betas) w.f64(b);
    w.u32(static_cast<std::uint32_t>(a.latent_channels));
    w.u32(static_cast<std::uint32_t>(a.latent_rows));
    w.u32(static_cast<std::uint32_t>(a.latent_cols));
    w.u32(static_cast<std::uint32_t>(a.scale_factor));
    w.u32(a.kind == PredictionKind::eps ? 0u : 1u);
    return std::move(w.data());
}

inline InitAck parse_init_ack(const std::vector<std::uint8_t>& p) {
    Reader r(p);
    InitAck a;
    const std::uint32_t T = r.u32();
    require(T >= 1 && T <= 100000, ErrorCode::protocol, "INIT_ACK step count " + std::to_string(T) + " out of range");
    require(r.remaining() >= std::size_t(T) * 8, ErrorCode::protocol, "INIT_ACK beta table truncated");
    a.betas.resize(T);
    for (double& b : a.betas) b = r.f64();
    a.latent_channels = static_cast<int>(r.u32());
    a.latent_rows = static_cast<int>(r.u32());
    a.latent_cols = static_cast<int>(r.u32());
    a.scale_factor = static_cast<int>(r.u32());
    const std::uint32_t kind = r.u32();
    r.expect_end("INIT_ACK");
    require(kind <= 1, ErrorCode::protocol, "INIT_ACK prediction kind " + std::to_string(kind) + " unknown");
    require(a.latent_channels >= 1 && a.latent_channels <= 1024 && a.latent_rows >= 1 && a.latent_cols >= 1 &&
                a.scale_factor >= 1 && a.latent_rows <= (1 << 20) && a.latent_cols <= (1 << 20),
            ErrorCode::protocol, "INIT_ACK latent shape out of range");
    a.kind = kind == 0 ? PredictionKind::eps : PredictionKind::v;
    return a;
}

// Byte stream with blocking exact reads. Failures raise connection errors.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void write_all(const std::uint8_t* data, std::size_t n) = 0;
    virtual void read_exact(std::uint8_t* data, std::size_t n) = 0;
    virtual void close() = 0;
};

class FdTransport : public Transport {
public:
    // timeout_ms < 0 waits forever
    FdTransport(int read_fd, int write_fd, bool is_socket, int timeout_ms = -1)
        : rfd_(read_fd), wfd_(write_fd), socket_(is_socket), timeout_ms_(timeout_ms) {}
    ~FdTransport() override { FdTransport::close(); }
    FdTransport(const FdTransport&) = delete;
    FdTransport& operator=(const FdTransport&) = delete;

    void set_timeout(int ms) { timeout_ms_ = ms; }

    void write_all(const std::uint8_t* data, std::size_t n) override {
        require(wfd_ >= 0, ErrorCode::connection, "transport is closed");
        while (n > 0) {
            const ssize_t k = socket_ ? ::send(wfd_, data, n, MSG_NOSIGNAL) : ::write(wfd_, data, n);
            if (k < 0 && errno == EINTR) continue;
            require(k > 0, ErrorCode::connection, std::string("write failed: ") + std::strerror(errno));
            data += k;
            n -= static_cast<std::size_t>(k);
        }
    }

    void read_exact(std::uint8_t* data, std::size_t n) override {
        require(rfd_ >= 0, ErrorCode::connection, "transport is closed");
        while (n > 0) {
            if (timeout_ms_ >= 0) {
                pollfd p{rfd_, POLLIN, 0};
                const int ready = ::poll(&p, 1, timeout_ms_);
                if (ready < 0 && errno == EINTR) continue;
                require(ready > 0, ErrorCode::connection, ready == 0 ? "read timed out" : "poll failed");
            }
            const ssize_t k = ::read(rfd_, data, n);
            if (k < 0 && errno == EINTR) continue;
            require(k != 0, ErrorCode::connection, "peer closed the connection");
            require(k > 0, ErrorCode::connection, std::string("read failed: ") + std::strerror(errno));
            data += k;
            n -= static_cast<std::size_t>(k);
        }
    }

    void close() override {
        if (rfd_ >= 0) ::close(rfd_);
        if (wfd_ >= 0 && wfd_ != rfd_) ::close(wfd_);
        rfd_ = wfd_ = -1;
        if (child_ > 0) {
            int status = 0;
            ::waitpid(child_, &status, 0);
            child_ = -1;
        }
    }

    void adopt_child(pid_t pid) { child_ = pid; }

    // Ends both directions of a socket without releasing the descriptor.
    void hang_up() {
        if (socket_ && rfd_ >= 0) ::shutdown(rfd_, SHUT_RDWR);
    }

private:
    int rfd_, wfd_;
    bool socket_;
    int timeout_ms_;
    pid_t child_ = -1;
};

inline std::unique_ptr<FdTransport> connect_tcp(const std::string& host, const std::string& port, int timeout_ms = -1) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
    require(rc == 0, ErrorCode::connection, "cannot resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
    int fd = -1;
    std::string last = "no addresses";
    for (addrinfo* a = res; a; a = a->ai_next) {
        fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
        last = std::strerror(errno);
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    require(fd >= 0, ErrorCode::connection, "cannot connect to " + host + ":" + port + ": " + last);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return std::make_unique<FdTransport>(fd, fd, true, timeout_ms);
}

// Runs `command` through /bin/sh with its stdin/stdout connected to the transport.
inline std::unique_ptr<FdTransport> spawn_stdio(const std::string& command, int timeout_ms = -1) {
    int to_child[2], from_child[2];
    require(::pipe2(to_child, O_CLOEXEC) == 0, ErrorCode::connection, "pipe failed");
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        fail(ErrorCode::connection, "pipe failed");
    }
    const pid_t pid = ::fork();
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (pid < 0) {
        ::close(to_child[1]);
        ::close(from_child[0]);
        fail(ErrorCode::connection, "fork failed");
    }
    // a dead child must surface as a connection error, not SIGPIPE
    std::signal(SIGPIPE, SIG_IGN);
    auto t = std::make_unique<FdTransport>(from_child[0], to_child[1], false, timeout_ms);
    t->adopt_child(pid);
    return t;
}

// "host:port" or "stdio:<command>"
inline std::unique_ptr<FdTransport> open_transport(const std::string& target, int timeout_ms = -1) {
    if (target.rfind("stdio:", 0) == 0) {
        require(target.size() > 6, ErrorCode::parameter, "stdio bridge needs a command");
        return spawn_stdio(target.substr(6), timeout_ms);
    }
    const auto colon = target.rfind(':');
    require(colon != std::string::npos && colon > 0 && colon + 1 < target.size(), ErrorCode::parameter,
            "bridge target must be host:port or stdio:<command>, got '" + target + "'");
    std::string host = target.substr(0, colon);
    if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    return connect_tcp(host, target.substr(colon + 1), timeout_ms);
}

inline void write_frame(Transport& t, MsgType type, const std::vector<std::uint8_t>& payload) {
    const auto bytes = encode_frame(type, payload);
    t.write_all(bytes.data(), bytes.size());
}

// Reads one complete frame. A bad header raises a protocol error before any
// payload is consumed.
inline Frame read_frame(Transport& t, std::uint64_t max_payload = default_max_payload) {
    std::uint8_t h[header_size];
    t.read_exact(h, header_size);
    require(std::memcmp(h, magic, 4) == 0, ErrorCode::protocol, "bad magic bytes");
    const std::uint16_t version = static_cast<std::uint16_t>(h[4] | h[5] << 8);
    require(version == protocol_version, ErrorCode::protocol, "unsupported protocol version " + std::to_string(version));
    const std::uint16_t type = static_cast<std::uint16_t>(h[6] | h[7] << 8);
    require(type >= 1 && type <= 8, ErrorCode::protocol, "unknown message type " + std::to_string(type));
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= std::uint64_t(h[8 + i]) << (8 * i);
    require(len <= max_payload, ErrorCode::protocol, "payload length " + std::to_string(len) + " exceeds limit");
    Frame f;
    f.type = static_cast<MsgType>(type);
    f.payload.resize(static_cast<std::size_t>(len));
    if (len) t.read_exact(f.payload.data(), f.payload.size());
    return f;
}

// One client session. Requests are strictly serial; any protocol or
// connection failure closes the session.
class Session {
public:
    explicit Session(std::unique_ptr<Transport> transport, std::uint64_t max_payload = default_max_payload)
        : t_(std::move(transport)), max_payload_(max_payload) {
        require(t_ != nullptr, ErrorCode::connection, "no transport");
    }
    ~Session() {
        try {
            shutdown();
        } catch (...) {
        }
    }
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    bool open() const noexcept { return t_ != nullptr; }
    bool initialized() const noexcept { return ack_.has_value(); }
    const InitAck& info() const {
        require(initialized(), ErrorCode::protocol, "session not initialized");
        return *ack_;
    }
    NoiseSchedule schedule() const { return NoiseSchedule(info().betas); }
    Dims image_dims() const noexcept { return image_; }

    const InitAck& init(Dims image) {
        require(!initialized(), ErrorCode::protocol, "session already initialized");
        Writer w;
        w.u32(static_cast<std::uint32_t>(image.rows));
        w.u32(static_cast<std::uint32_t>(image.cols));
        const Frame f = exchange(MsgType::init, w.data(), MsgType::init_ack);
        guarded([&] {
            InitAck a = parse_init_ack(f.payload);
            for (double b : a.betas)
                require(std::isfinite(b) && b > 0.0 && b < 1.0, ErrorCode::protocol, "INIT_ACK beta outside (0,1)");
            require(a.latent_rows * a.scale_factor == image.rows && a.latent_cols * a.scale_factor == image.cols,
                    ErrorCode::protocol, "INIT_ACK latent shape does not match the image");
            ack_ = std::move(a);
        });
        image_ = image;
        return *ack_;
    }

    Planes encode(const Planes& image) {
        require(image.channels() == 3 && image.dims() == image_, ErrorCode::dimension,
                "ENCODE expects a 3x" + to_string(image_) + " image");
        return tensor_request(MsgType::encode, tensor_payload(image), info().latent_channels, latent_dims(), "ENCODE");
    }

    Planes decode(const Planes& latent) {
        check_latent(latent, "DECODE");
        return tensor_request(MsgType::decode, tensor_payload(latent), 3, image_, "DECODE");
    }

    Planes predict(const Planes& x_t, int t, const Planes& rgb_latent) {
        check_latent(x_t, "PREDICT");
        check_latent(rgb_latent, "PREDICT conditioning");
        require(t >= 1 && t <= static_cast<int>(info().betas.size()), ErrorCode::range, "PREDICT timestep out of range");
        Writer w;
        w.u32(static_cast<std::uint32_t>(t));
        write_tensor(w, x_t);
        write_tensor(w, rgb_latent);
        return tensor_request(MsgType::predict, w.data(), info().latent_channels, latent_dims(), "PREDICT");
    }

    void shutdown() {
        if (!t_) return;
        try {
            write_frame(*t_, MsgType::shutdown, {});
        } catch (const Error&) {
        }
        close();
    }

    void close() {
        if (t_) t_->close();
        t_.reset();
    }

    Dims latent_dims() const { return {info().latent_rows, info().latent_cols}; }

private:
    template <class F>
    void guarded(F&& f) {
        try {
            f();
        } catch (const Error& e) {
            if (e.code() == ErrorCode::protocol || e.code() == ErrorCode::connection) close();
            throw;
        }
    }

    Frame exchange(MsgType type, const std::vector<std::uint8_t>& payload, MsgType expected) {
        require(open(), ErrorCode::connection, "session is closed");
        Frame f;
        guarded([&] {
            write_frame(*t_, type, payload);
            f = read_frame(*t_, max_payload_);
        });
        if (f.type == MsgType::error) {
            const std::string msg(f.payload.begin(), f.payload.end());
            fail(ErrorCode::remote, "server: " + msg);
        }
        if (f.type != expected) {
            close();
            fail(ErrorCode::protocol, "expected " + to_string(expected) + " to " + to_string(type) + ", got " +
                                          to_string(f.type));
        }
        return f;
    }

    Planes tensor_request(MsgType type, const std::vector<std::uint8_t>& payload, int channels, Dims dims,
                          const char* what) {
        const Frame f = exchange(type, payload, MsgType::response);
        Planes out;
        guarded([&] {
            out = tensor_from_payload(f.payload, what);
            require(out.channels() == channels && out.dims() == dims, ErrorCode::protocol,
                    std::string(what) + " response has shape " + shape_string(out) + ", expected " +
                        std::to_string(channels) + "x" + to_string(dims));
            require(all_finite(out.values()), ErrorCode::protocol, std::string(what) + " response is not finite");
        });
        return out;
    }

    void check_latent(const Planes& x, const char* what) const {
        require(x.channels() == info().latent_channels && x.dims() == latent_dims(), ErrorCode::dimension,
                std::string(what) + " tensor " + shape_string(x) + " does not match the negotiated latent shape");
    }

    std::unique_ptr<Transport> t_;
    std::uint64_t max_payload_;
    std::optional<InitAck> ack_;
    Dims image_{};
};

class BridgeDenoiser final : public Denoiser {
public:
    explicit BridgeDenoiser(Session& s) : s_(s) {}
    PredictionKind kind() const override { return s_.info().kind; }
    LatentSample predict(const LatentSample& x_t, int t, const Planes& rgb_latent) override {
        return LatentSample(s_.predict(x_t, t, rgb_latent), t);
    }

private:
    Session& s_;
};

class BridgeCodec final : public LatentCodec {
public:
    explicit BridgeCodec(Session& s) : s_(s) {}
    LatentSample encode(const Planes& image) const override { return LatentSample(s_.encode(image), 0); }
    Planes decode(const Planes& latent) const override { return s_.decode(latent); }
    int scale_factor() const override { return s_.info().scale_factor; }
    int latent_channels() const override { return s_.info().latent_channels; }
    double tolerance() const override { return std::numeric_limits<double>::quiet_NaN(); }
    std::string name() const override { return "bridge"; }

private:
    Session& s_;
};

// Server side, used by tests and by in-process model hosts.
class Handler {
public:
    virtual ~Handler() = default;
    virtual InitAck init(Dims image) = 0;
    virtual Planes encode(const Planes& image) = 0;
    virtual Planes decode(const Planes& latent) = 0;
    virtual Planes predict(int t, const Planes& x_t, const Planes& rgb_latent) = 0;
};

// Answers frames until SHUTDOWN or end of stream. Handler exceptions become
// ERROR frames and the session continues; malformed frames get an ERROR
// reply and end the session.
inline void serve(Transport& t, Handler& h) {
    bool initialized = false;
    for (;;) {
        Frame f;
        try {
            f = read_frame(t);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::protocol) {
                const std::string m = e.what();
                try {
                    write_frame(t, MsgType::error, {m.begin(), m.end()});
                } catch (const Error&) {
                }
            }
            return;
        }
        if (f.type == MsgType::shutdown) return;
        try {
            std::vector<std::uint8_t> reply;
            MsgType rtype = MsgType::response;
            switch (f.type) {
                case MsgType::init: {
                    Reader r(f.payload);
                    const int rows = static_cast<int>(r.u32()), cols = static_cast<int>(r.u32());
                    r.expect_end("INIT");
                    reply = init_ack_payload(h.init({rows, cols}));
                    rtype = MsgType::init_ack;
                    initialized = true;
                    break;
                }
                case MsgType::encode:
                case MsgType::decode: {
                    require(initialized, ErrorCode::protocol, "INIT required first");
                    const Planes in = tensor_from_payload(f.payload, to_string(f.type).c_str());
                    reply = tensor_payload(f.type == MsgType::encode ? h.encode(in) : h.decode(in));
                    break;
                }
                case MsgType::predict: {
                    require(initialized, ErrorCode::protocol, "INIT required first");
                    Reader r(f.payload);
                    const int step = static_cast<int>(r.u32());
                    const Planes x = read_tensor(r);
                    const Planes rgb = read_tensor(r);
                    r.expect_end("PREDICT");
                    reply = tensor_payload(h.predict(step, x, rgb));
                    break;
                }
                default: fail(ErrorCode::protocol, "unexpected " + to_string(f.type) + " from client");
            }
            write_frame(t, rtype, reply);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::connection) return;
            const std::string m = e.what();
            try {
                write_frame(t, MsgType::error, {m.begin(), m.end()});
            } catch (const Error&) {
                return;
            }
        } catch (const std::exception& e) {
            const std::string m = e.what();
            try {
                write_frame(t, MsgType::error, {m.begin(), m.end()});
            } catch (const Error&) {
                return;
            }
        }
    }
}

// A server running on a thread of this process, connected over a socketpair.
class LoopbackServer {
public:
    explicit LoopbackServer(std::function<void(Transport&)> body, int client_timeout_ms = 10000) {
        int fds[2];
        require(::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) == 0, ErrorCode::connection,
                "socketpair failed");
        client_ = std::make_unique<FdTransport>(fds[0], fds[0], true, client_timeout_ms);
        server_ = std::make_unique<FdTransport>(fds[1], fds[1], true);
        thread_ = std::thread([this, body = std::move(body)] {
            try {
                body(*server_);
            } catch (...) {
            }
            server_->hang_up();
        });
    }

    LoopbackServer(Handler& h, int client_timeout_ms = 10000)
        : LoopbackServer([&h](Transport& t) { serve(t, h); }, client_timeout_ms) {}

    ~LoopbackServer() {
        server_->hang_up();
        if (thread_.joinable()) thread_.join();
    }

    // The client end; hand it to a Session.
    std::unique_ptr<Transport> take_client() { return std::move(client_); }

private:
    std::unique_ptr<FdTransport> client_;
    std::unique_ptr<FdTransport> server_;
    std::thread thread_;
};

}  // namespace steerkit::bridge
