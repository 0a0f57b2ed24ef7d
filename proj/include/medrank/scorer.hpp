#pragma once

// Re-ranker wire protocol. Requests are `pair_id<TAB>query<TAB>doc` lines and
// responses are `pair_id<TAB>score` lines, UTF-8, one record per line.
// Pipe transport: one scorer process per batch, request stream closed at the
// end of the batch, scorer closes its output when done. TCP transport: a
// persistent connection, each batch terminated by a `##END##` line in both
// directions.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "medrank/error.hpp"
#include "medrank/util.hpp"

extern char** environ;

namespace medrank {

inline constexpr std::string_view batch_terminator = "##END##";

struct PairRequest {
    std::string pair_id;
    std::string query;
    std::string doc;
};

struct PairScore {
    std::string pair_id;
    double score = 0.0;

    friend bool operator==(const PairScore&, const PairScore&) = default;
};

/// Where the scorer lives: a shell command spoken to over pipes, or a
/// `host:port` TCP endpoint.
struct ScorerHandle {
    enum class Transport { pipe, tcp };
    Transport transport = Transport::pipe;
    std::string identity;

    static ScorerHandle command(std::string cmd) { return {Transport::pipe, std::move(cmd)}; }
    static ScorerHandle endpoint(std::string host_port) { return {Transport::tcp, std::move(host_port)}; }
};

/// Moves one batch of request lines to the scorer and returns its response lines.
class ScorerTransport {
public:
    virtual ~ScorerTransport() = default;
    virtual std::vector<std::string> round_trip(const std::vector<std::string>& request_lines) = 0;
};

// ---------------------------------------------------------------------------
// Line codec

inline bool has_line_break_or_tab(std::string_view s) { return s.find_first_of("\t\r\n") != std::string_view::npos; }

inline std::string format_request(const PairRequest& r) { return r.pair_id + '\t' + r.query + '\t' + r.doc; }

/// Shortest text that parses back to the same double.
inline std::string format_wire_score(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Sends the pairs and returns one score per pair, in request order. Responses
/// may arrive in any order; they are matched by pair_id.
inline std::vector<PairScore> score_pairs(ScorerTransport& transport, const std::vector<PairRequest>& pairs)
{
    if (pairs.empty()) return {};
    std::unordered_map<std::string_view, std::size_t> slot;
    std::vector<std::string> lines;
    lines.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        if (p.pair_id.empty() || has_line_break_or_tab(p.pair_id))
            throw ContractError("pair id must be non-empty and free of tabs and line breaks");
        if (has_line_break_or_tab(p.query) || has_line_break_or_tab(p.doc))
            throw ContractError("pair " + p.pair_id + ": texts must not contain tabs or line breaks");
        if (!slot.emplace(p.pair_id, i).second) throw ContractError("duplicate pair id " + p.pair_id);
        lines.push_back(format_request(p));
    }

    auto responses = transport.round_trip(lines);

    std::vector<PairScore> out(pairs.size());
    std::vector<bool> filled(pairs.size(), false);
    std::size_t count = 0;
    for (const auto& line : responses) {
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ProtocolError("malformed response line: '" + line + "'");
        std::string_view id(line.data(), tab);
        auto score_text = trim(std::string_view(line).substr(tab + 1));
        auto it = slot.find(id);
        if (it == slot.end()) throw ProtocolError("response for unknown pair id '" + std::string(id) + "'");
        if (filled[it->second]) throw ProtocolError("duplicate response for pair id '" + std::string(id) + "'");
        auto score = parse_double(score_text);
        if (!score || !std::isfinite(*score))
            throw ProtocolError("pair " + std::string(id) + ": score is not a finite number: '" + std::string(score_text) + "'");
        filled[it->second] = true;
        out[it->second] = {pairs[it->second].pair_id, *score};
        ++count;
    }
    if (count != pairs.size())
        throw TransportError("scorer answered " + std::to_string(count) + " of " + std::to_string(pairs.size()) + " pairs");
    return out;
}

// ---------------------------------------------------------------------------
// Server side, used by reference scorers and the conformance harness

using PairFunction = std::function<double(const PairRequest&)>;

/// Response for one request line; malformed requests get `pair_id<TAB>ERR`.
inline std::string respond(std::string_view request_line, const PairFunction& fn)
{
    if (!request_line.empty() && request_line.back() == '\r') request_line.remove_suffix(1);
    auto fields = split(request_line, '\t');
    if (fields.size() != 3) return std::string(fields.front()) + "\tERR";
    PairRequest req{std::string(fields[0]), std::string(fields[1]), std::string(fields[2])};
    return req.pair_id + '\t' + format_wire_score(fn(req));
}

/// Pipe-mode server loop: answers every line until end of input.
inline void serve_stream(std::istream& in, std::ostream& out, const PairFunction& fn)
{
    std::string line;
    while (std::getline(in, line)) out << respond(line, fn) << '\n';
    out.flush();
}

/// Runs `fn` inside the process while still going through the line codec.
class InProcessTransport : public ScorerTransport {
public:
    explicit InProcessTransport(PairFunction fn)
        : fn_(std::move(fn))
    {}

    std::vector<std::string> round_trip(const std::vector<std::string>& request_lines) override
    {
        ++batches_;
        std::vector<std::string> out;
        out.reserve(request_lines.size());
        for (const auto& l : request_lines) out.push_back(respond(l, fn_));
        return out;
    }

    std::size_t batches() const { return batches_; }

private:
    PairFunction fn_;
    std::size_t batches_ = 0;
};

// ---------------------------------------------------------------------------
// Pipe transport

namespace detail {

inline void write_all(int fd, std::string_view data)
{
    while (!data.empty()) {
        auto n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("write to scorer failed: ") + std::strerror(errno));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

inline std::vector<std::string> split_lines(const std::string& buf)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < buf.size()) {
        auto nl = buf.find('\n', start);
        if (nl == std::string::npos) nl = buf.size();
        std::string line = buf.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = nl + 1;
    }
    return lines;
}

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd)
        : fd_(fd)
    {}
    Fd(Fd&& o) noexcept
        : fd_(std::exchange(o.fd_, -1))
    {}
    Fd& operator=(Fd&& o) noexcept
    {
        reset();
        fd_ = std::exchange(o.fd_, -1);
        return *this;
    }
    ~Fd() { reset(); }
    int get() const { return fd_; }
    void reset()
    {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

}  // namespace detail

/// Spawns `/bin/sh -c command` for each batch.
class PipeTransport : public ScorerTransport {
public:
    explicit PipeTransport(std::string command)
        : command_(std::move(command))
    {
        ::signal(SIGPIPE, SIG_IGN);
    }

    std::vector<std::string> round_trip(const std::vector<std::string>& request_lines) override
    {
        int to_child[2], from_child[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0)
            throw TransportError(std::string("pipe() failed: ") + std::strerror(errno));
        detail::Fd child_in(to_child[0]), parent_out(to_child[1]), parent_in(from_child[0]), child_out(from_child[1]);

        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, child_in.get(), 0);
        posix_spawn_file_actions_adddup2(&actions, child_out.get(), 1);
        const char* argv[] = {"sh", "-c", command_.c_str(), nullptr};
        pid_t pid = 0;
        int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
        posix_spawn_file_actions_destroy(&actions);
        if (rc != 0) throw TransportError("cannot start scorer: " + std::string(std::strerror(rc)));
        child_in.reset();
        child_out.reset();

        std::string payload;
        for (const auto& l : request_lines) {
            payload += l;
            payload += '\n';
        }
        std::exception_ptr write_error;
        std::thread writer([&] {
            try {
                detail::write_all(parent_out.get(), payload);
            } catch (...) {
                write_error = std::current_exception();
            }
            parent_out.reset();
        });

        std::string received;
        char buf[65536];
        for (;;) {
            auto n = ::read(parent_in.get(), buf, sizeof buf);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) break;
            received.append(buf, static_cast<std::size_t>(n));
        }
        writer.join();
        int status = 0;
        while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {}
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
            throw TransportError("scorer command exited abnormally (status " +
                std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) + "): " + command_);
        if (write_error) std::rethrow_exception(write_error);
        return detail::split_lines(received);
    }

private:
    std::string command_;
};

// ---------------------------------------------------------------------------
// TCP transport

class TcpTransport : public ScorerTransport {
public:
    TcpTransport(std::string host, std::string port)
        : host_(std::move(host))
        , port_(std::move(port))
    {}

    static std::unique_ptr<TcpTransport> from_endpoint(std::string_view host_port)
    {
        auto colon = host_port.rfind(':');
        if (colon == std::string_view::npos || colon == 0 || colon + 1 == host_port.size())
            throw ContractError("scorer endpoint must be host:port, got '" + std::string(host_port) + "'");
        return std::make_unique<TcpTransport>(std::string(host_port.substr(0, colon)), std::string(host_port.substr(colon + 1)));
    }

    std::vector<std::string> round_trip(const std::vector<std::string>& request_lines) override
    {
        if (sock_.get() < 0) connect();
        std::string payload;
        for (const auto& l : request_lines) {
            payload += l;
            payload += '\n';
        }
        payload += batch_terminator;
        payload += '\n';
        send_all(payload);

        std::vector<std::string> lines;
        for (;;) {
            auto nl = pending_.find('\n');
            if (nl == std::string::npos) {
                char buf[65536];
                auto n = ::recv(sock_.get(), buf, sizeof buf, 0);
                if (n < 0 && errno == EINTR) continue;
                if (n <= 0) {
                    sock_.reset();
                    pending_.clear();
                    throw TransportError("scorer at " + host_ + ":" + port_ + " disconnected mid-batch");
                }
                pending_.append(buf, static_cast<std::size_t>(n));
                continue;
            }
            std::string line = pending_.substr(0, nl);
            pending_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line == batch_terminator) return lines;
            lines.push_back(std::move(line));
        }
    }

private:
    void connect()
    {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (int rc = ::getaddrinfo(host_.c_str(), port_.c_str(), &hints, &res); rc != 0)
            throw TransportError("cannot resolve scorer host " + host_ + ": " + ::gai_strerror(rc));
        std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);
        for (auto* ai = res; ai; ai = ai->ai_next) {
            detail::Fd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
            if (fd.get() < 0) continue;
            if (::connect(fd.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
                sock_ = std::move(fd);
                return;
            }
        }
        throw TransportError("cannot connect to scorer at " + host_ + ":" + port_);
    }

    void send_all(std::string_view data)
    {
        while (!data.empty()) {
            auto n = ::send(sock_.get(), data.data(), data.size(), MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                sock_.reset();
                throw TransportError(std::string("send to scorer failed: ") + std::strerror(errno));
            }
            data.remove_prefix(static_cast<std::size_t>(n));
        }
    }

    std::string host_, port_;
    detail::Fd sock_;
    std::string pending_;
};

/// Background TCP scorer on 127.0.0.1 speaking the batch protocol. Port 0
/// picks a free port; see port().
class TcpScorerServer {
public:
    TcpScorerServer(PairFunction fn, unsigned short port = 0)
        : fn_(std::move(fn))
    {
        listener_ = detail::Fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
        if (listener_.get() < 0) throw TransportError("socket() failed");
        int one = 1;
        ::setsockopt(listener_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(port);
        if (::bind(listener_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
            throw TransportError(std::string("bind() failed: ") + std::strerror(errno));
        if (::listen(listener_.get(), 16) != 0) throw TransportError("listen() failed");
        socklen_t len = sizeof addr;
        ::getsockname(listener_.get(), reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        thread_ = std::thread([this] { accept_loop(); });
    }

    ~TcpScorerServer()
    {
        stop_ = true;
        ::shutdown(listener_.get(), SHUT_RDWR);
        if (thread_.joinable()) thread_.join();
    }

    TcpScorerServer(const TcpScorerServer&) = delete;
    TcpScorerServer& operator=(const TcpScorerServer&) = delete;

    unsigned short port() const { return port_; }
    std::string endpoint() const { return "127.0.0.1:" + std::to_string(port_); }

    /// Blocks serving connections until the listener is shut down.
    void wait() { thread_.join(); }

private:
    void accept_loop()
    {
        while (!stop_) {
            int c = ::accept4(listener_.get(), nullptr, nullptr, SOCK_CLOEXEC);
            if (c < 0) {
                if (errno == EINTR) continue;
                return;
            }
            detail::Fd conn(c);
            serve_connection(conn.get());
        }
    }

    void serve_connection(int fd)
    {
        std::string pending, out;
        char buf[65536];
        for (;;) {
            auto n = ::recv(fd, buf, sizeof buf, 0);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) return;
            pending.append(buf, static_cast<std::size_t>(n));
            std::size_t nl;
            while ((nl = pending.find('\n')) != std::string::npos) {
                std::string line = pending.substr(0, nl);
                pending.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line == batch_terminator) {
                    out += batch_terminator;
                    out += '\n';
                    std::string_view data(out);
                    while (!data.empty()) {
                        auto w = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
                        if (w <= 0) return;
                        data.remove_prefix(static_cast<std::size_t>(w));
                    }
                    out.clear();
                } else {
                    out += respond(line, fn_);
                    out += '\n';
                }
            }
        }
    }

    PairFunction fn_;
    detail::Fd listener_;
    unsigned short port_ = 0;
    std::atomic<bool> stop_{false};
    std::thread thread_;
};

inline std::unique_ptr<ScorerTransport> make_transport(const ScorerHandle& handle)
{
    if (handle.identity.empty()) throw ContractError("scorer handle has no command or endpoint");
    if (handle.transport == ScorerHandle::Transport::pipe) return std::make_unique<PipeTransport>(handle.identity);
    return TcpTransport::from_endpoint(handle.identity);
}

inline std::vector<PairScore> score_pairs(const ScorerHandle& handle, const std::vector<PairRequest>& pairs)
{
    if (pairs.empty()) return {};
    auto transport = make_transport(handle);
    return score_pairs(*transport, pairs);
}

}  // namespace medrank
