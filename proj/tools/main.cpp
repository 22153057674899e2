#include <cstdio>
int main() { std::puts("swoc cli placeholder"); return 0; }
