/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/core/parallel.hpp
 *
 * Copyright 2026 The facelearn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <functional>

namespace facelearn {

/**
 * Calls fn(i) for i in [0, n) on up to `threads` worker threads (sequentially when threads <= 1).
 * Callers write results into per-index slots and reduce afterwards in index order, which keeps
 * results independent of the thread count. If calls throw, the exception of the lowest index is
 * rethrown after all workers finish.
 */
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace facelearn
