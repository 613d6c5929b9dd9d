#include <cstdio>

int main() {
    std::puts("hyperseq: placeholder");
    return 0;
}
