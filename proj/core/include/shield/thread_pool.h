// Copyright 2026 The Shield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHIELD_THREAD_POOL_H_
#define SHIELD_THREAD_POOL_H_

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace shield {

// Fixed set of worker threads that execute index-parallel loops. The calling
// thread takes part in every loop, so a pool of size 1 spawns no threads.
class ThreadPool {
 public:
  explicit ThreadPool(int workers);
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  // Calls body(i) for every i in [0, count) and returns when all calls have
  // finished. Indices are handed out in increasing order. The first exception
  // thrown by a body is rethrown here.
  void ParallelFor(int count, const std::function<void(int)>& body);

 private:
  void WorkerLoop();
  void Drain();

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(int)>* body_ = nullptr;
  int count_ = 0;
  int next_ = 0;
  int running_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

// Worker count from SHIELD_THREADS when set, else the hardware concurrency.
int DefaultWorkerCount();

}  // namespace shield

#endif  // SHIELD_THREAD_POOL_H_
