// Acceptance suite: one pass/fail line per criterion. Placeholder while the
// library comes up; filled in below.
#include <cstdio>

int main() {
    std::printf("acceptance suite placeholder\n");
    return 1;
}
