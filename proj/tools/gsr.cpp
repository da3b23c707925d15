#include <cstdio>

int main() {
  std::printf("gsr: command-line interface under construction\n");
  return 0;
}
