#pragma once

#include <atomic>
#include <csignal>
#include <cstdint>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "tiledet/detect.hpp"
#include "tiledet/image_io.hpp"
#include "tiledet/types.hpp"

namespace tiledet {

/// Outcome of one patch in a batched external-detector call.
struct PatchResult {
  bool ok = false;
  std::vector<Detection> detections;
  std::string error;
};

// Adapter for an external detector process speaking line-delimited JSON over
// stdin/stdout. One request per line; responses may arrive in any order and
// are matched back to callers by id. The adapter is the single owner of the
// child's pipes: writes are serialized, one reader thread demultiplexes.
class SubprocessDetector final : public Detector {
 public:
  explicit SubprocessDetector(const ExternalParams& params) : params_(params) {
    // A dead child must surface as a request error, not a SIGPIPE kill.
    std::signal(SIGPIPE, SIG_IGN);
    spawn();
    reader_ = std::thread([this] { reader_loop(); });
  }

  SubprocessDetector(const SubprocessDetector&) = delete;
  SubprocessDetector& operator=(const SubprocessDetector&) = delete;

  ~SubprocessDetector() override {
    {
      std::lock_guard<std::mutex> lk(mu_);
      shutting_down_ = true;
    }
    if (in_fd_ >= 0) ::close(in_fd_);  // child sees EOF
    if (reader_.joinable()) reader_.join();
    if (out_fd_ >= 0) ::close(out_fd_);
    reap_child();
  }

  std::vector<Detection> detect(const ImageBuffer& patch) override {
    const std::uint64_t id = submit(patch);
    return await(id, deadline_from_now());
  }

  /// Submit every patch up front, then collect results in input order.
  std::vector<PatchResult> detect_batch(const std::vector<ImageBuffer>& patches) {
    std::vector<std::uint64_t> ids;
    ids.reserve(patches.size());
    std::vector<PatchResult> results(patches.size());
    for (std::size_t i = 0; i < patches.size(); ++i) {
      try {
        ids.push_back(submit(patches[i]));
      } catch (const Error& ex) {
        ids.push_back(0);
        results[i].error = ex.what();
      }
    }
    const auto deadline = deadline_from_now();
    for (std::size_t i = 0; i < patches.size(); ++i) {
      if (ids[i] == 0) continue;
      try {
        results[i].detections = await(ids[i], deadline);
        results[i].ok = true;
      } catch (const Error& ex) {
        results[i].error = ex.what();
      }
    }
    return results;
  }

 private:
  struct Pending {
    bool done = false;
    bool failed = false;
    std::string error;
    std::vector<Detection> detections;
    int patch_w = 0, patch_h = 0;
  };

  std::chrono::steady_clock::time_point deadline_from_now() const {
    return std::chrono::steady_clock::now() + std::chrono::milliseconds(params_.timeout_ms);
  }

  void spawn() {
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw IoError("external detector: pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw IoError("external detector: pipe() failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      throw IoError("external detector: fork() failed");
    }
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      ::execl("/bin/sh", "sh", "-c", params_.command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
  }

  void reap_child() {
    if (pid_ <= 0) return;
    int status = 0;
    for (int i = 0; i < 20; ++i) {  // ~2s grace after stdin EOF
      if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    ::kill(pid_, SIGTERM);
    for (int i = 0; i < 10; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }

  std::uint64_t submit(const ImageBuffer& patch) {
    const std::string b64 = base64_encode(encode_png(patch));
    const std::uint64_t id = next_id_.fetch_add(1);
    auto pending = std::make_shared<Pending>();
    pending->patch_w = patch.width;
    pending->patch_h = patch.height;
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (!fatal_.empty()) throw DetectorError(fatal_);
      pending_[id] = pending;
    }
    std::string line = "{\"id\":" + std::to_string(id) +
                       ",\"width\":" + std::to_string(patch.width) +
                       ",\"height\":" + std::to_string(patch.height) +
                       ",\"png_b64\":\"" + b64 + "\"}\n";
    {
      std::lock_guard<std::mutex> wl(write_mu_);
      std::size_t off = 0;
      while (off < line.size()) {
        const ssize_t k = ::write(in_fd_, line.data() + off, line.size() - off);
        if (k < 0) {
          drop(id);
          throw DetectorError("external detector: write to child failed (process gone?)");
        }
        off += static_cast<std::size_t>(k);
      }
    }
    return id;
  }

  std::vector<Detection> await(std::uint64_t id,
                               std::chrono::steady_clock::time_point deadline) {
    std::unique_lock<std::mutex> lk(mu_);
    std::shared_ptr<Pending> p = pending_.at(id);
    if (!cv_.wait_until(lk, deadline, [&] { return p->done; })) {
      pending_.erase(id);
      throw DetectorError("external detector: timeout after " +
                          std::to_string(params_.timeout_ms) + " ms (id " +
                          std::to_string(id) + ")");
    }
    pending_.erase(id);
    if (p->failed) throw DetectorError(p->error);
    return std::move(p->detections);
  }

  void drop(std::uint64_t id) {
    std::lock_guard<std::mutex> lk(mu_);
    pending_.erase(id);
  }

  void reader_loop() {
    std::string buf;
    char chunk[4096];
    for (;;) {
      const ssize_t k = ::read(out_fd_, chunk, sizeof(chunk));
      if (k <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(k));
      std::size_t pos;
      while ((pos = buf.find('\n')) != std::string::npos) {
        std::string line = buf.substr(0, pos);
        buf.erase(0, pos + 1);
        if (line.empty()) continue;
        if (!handle_line(line)) return;  // protocol error, stream untrustworthy
      }
    }
    fail_all("external detector: process exited with requests in flight");
  }

  // Returns false on a fatal protocol error.
  bool handle_line(const std::string& line) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
      if (!doc.is_object() || !doc.contains("id")) throw ParseError("missing id");
    } catch (const std::exception&) {
      fail_all("external detector: malformed response line: " + line);
      return false;
    }
    const std::uint64_t id = doc["id"].get<std::uint64_t>();
    std::shared_ptr<Pending> p;
    {
      std::lock_guard<std::mutex> lk(mu_);
      auto it = pending_.find(id);
      if (it == pending_.end()) return true;  // late reply for a timed-out request
      p = it->second;
    }
    std::vector<Detection> dets;
    std::string error;
    bool failed = false;
    try {
      if (doc.contains("error")) {
        failed = true;
        error = "external detector: " + doc["error"].get<std::string>();
      } else {
        for (const auto& jd : doc.at("detections")) {
          Detection d;
          d.box = BBox{jd.at("x").get<int>(), jd.at("y").get<int>(),
                       jd.at("w").get<int>(), jd.at("h").get<int>()};
          d.score = std::clamp(jd.at("score").get<double>(), 0.0, 1.0);
          d.class_label = jd.value("class", std::string("person"));
          const auto clipped = clip_box(d.box, p->patch_w, p->patch_h);
          if (!clipped) continue;
          d.box = *clipped;
          dets.push_back(std::move(d));
        }
      }
    } catch (const std::exception&) {
      fail_all("external detector: malformed response line: " + line);
      return false;
    }
    {
      std::lock_guard<std::mutex> lk(mu_);
      p->done = true;
      p->failed = failed;
      p->error = std::move(error);
      p->detections = std::move(dets);
    }
    cv_.notify_all();
    return true;
  }

  void fail_all(const std::string& msg) {
    std::lock_guard<std::mutex> lk(mu_);
    if (shutting_down_) return;
    fatal_ = msg;
    for (auto& [id, p] : pending_) {
      if (!p->done) {
        p->done = true;
        p->failed = true;
        p->error = msg + " (unanswered id " + std::to_string(id) + ")";
      }
    }
    cv_.notify_all();
  }

  ExternalParams params_;
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::mutex write_mu_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::uint64_t, std::shared_ptr<Pending>> pending_;
  std::atomic<std::uint64_t> next_id_{1};
  std::string fatal_;
  bool shutting_down_ = false;
  std::thread reader_;
};

inline std::unique_ptr<Detector> make_detector(const DetectorSpec& spec) {
  if (spec.kind == DetectorSpec::Kind::external)
    return std::make_unique<SubprocessDetector>(spec.external);
  return std::make_unique<BaselineDetector>(spec.baseline);
}

}  // namespace tiledet
