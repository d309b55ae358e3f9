// Copyright 2026 The crashgym Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Fixed text of the repair prompt. Bump kTemplateVersion whenever any of
// these strings change; prompt sidecars record it.

#pragma once

#include <string_view>

namespace crashgym::prompt {

inline constexpr std::string_view kTemplateVersion = "repair-v1";

inline constexpr std::string_view kIntro =
    "You will be provided with a partial code base and an issue statement\n"
    "explaining a problem to resolve.\n";

inline constexpr std::string_view kExampleIntro =
    "Here is an example of a patch file. It consists of changes to the code\n"
    "base. It specifies the file names, the line numbers of each change,\n"
    "and the removed and added lines. A single patch file can contain\n"
    "changes to multiple files.\n";

inline constexpr std::string_view kExamplePatch = R"(--- a/file.py
+++ b/file.py
@@ -1,27 +1,35 @@
 def euclidean(a, b):
-    while b:
-        a, b = b, a % b
-    return a
+    if b == 0:
+        return a
+    return euclidean(b, a % b)
 
 
 def bresenham(x0, y0, x1, y1):
     points = []
     dx = abs(x1 - x0)
     dy = abs(y1 - y0)
-    sx = 1 if x0 < x1 else -1
-    sy = 1 if y0 < y1 else -1
-    err = dx - dy
+    x, y = x0, y0
+    sx = -1 if x0 > x1 else 1
+    sy = -1 if y0 > y1 else 1
 
-    while True:
-        points.append((x0, y0))
-        if x0 == x1 and y0 == y1:
-            break
-        e2 = 2 * err
-        if e2 > -dy:
+    if dx > dy:
+        err = dx / 2.0
+        while x != x1:
+            points.append((x, y))
             err -= dy
-            x0 += sx
-        if e2 < dx:
-            err += dx
-            y0 += sy
+            if err < 0:
+                y += sy
+                err += dx
+            x += sx
+    else:
+        err = dy / 2.0
+        while y != y1:
+            points.append((x, y))
+            err -= dx
+            if err < 0:
+                x += sx
+                err += dy
+            y += sy
 
+    points.append((x, y))
     return points
)";

inline constexpr std::string_view kTrailer =
    "I need you to solve the provided issue by generating a single patch file\n"
    "that I can apply directly to this repository using git apply. Please\n"
    "respond with a single patch file in the format shown above.\n"
    "Respond below:\n";

}  // namespace crashgym::prompt
