#include <stdio.h>
#include "relaydelay.h"

int main(void) {
    double zeros[] = {0.0};
    RdTrajectory *traj = NULL;
    if (rd_simulate(1.0, zeros, 1, -1, 0.0, 8.0, 0, &traj) != RD_STATUS_OK) {
        fprintf(stderr, "simulate failed: %s\n", rd_last_error());
        return 1;
    }
    size_t n = 0;
    rd_trajectory_len(traj, &n);
    double t[16], x[16];
    size_t written = 0;
    rd_trajectory_breakpoints(traj, t, x, 16, &written);
    for (size_t i = 0; i < written; i++) {
        printf("%g,%g\n", t[i], x[i]);
    }
    rd_trajectory_free(traj);

    RdConstants c;
    rd_constants(2.0, &c);
    printf("T0=%g\n", c.period);

    if (rd_simulate(-1.0, zeros, 1, -1, 0.0, 8.0, 0, &traj) != RD_STATUS_BAD_INPUT) {
        return 2;
    }
    printf("error=%s\n", rd_last_error());
    return 0;
}
