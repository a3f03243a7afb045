"""
A box sliding to rest under Coulomb friction
============================================

Push a box across the ground plane and let the contact solver bring it
to rest. Dry friction predicts a uniform deceleration mu * g, so the
stopping time and distance have closed forms we can check against.
"""

import numpy as np

from ekfphys.dynamics import Box, Plane, RigidBody, SimParams, World, step
from ekfphys.liegroup import Pose, Rotation, Twist

MU = 0.3
V0 = 1.2          # m/s, along +x
MASS = 0.8        # kg
DT = 1.0 / 240.0
GRAVITY = 9.81

shape = Box([0.04, 0.04, 0.03])
pose = Pose(np.array([0.0, 0.0, 0.03]), Rotation.identity())
twist = Twist(np.zeros(3), np.array([V0, 0.0, 0.0]))
body = RigidBody.from_shape(shape, MASS, pose, twist)
world = World((body,), (Plane([0.0, 0.0, 1.0]),), SimParams())

# the solver parameterizes friction as mu = theta**2
theta = np.sqrt(MU)

print(f"box of {MASS} kg launched at {V0} m/s, mu = {MU}")
print()
print("   t [s]   speed [m/s]   x [m]")
t = 0.0
t_stop = None
while t < 2.0:
    b = world.bodies[0]
    speed = float(np.linalg.norm(b.twist.v))
    if round(t / DT) % 24 == 0:
        print(f"  {t:6.2f}   {speed:11.4f}   {b.pose.p[0]:.4f}")
    if t_stop is None and speed < 1e-4:
        t_stop = t
        break
    world = step(world, theta, DT).world
    t += DT

distance = float(world.bodies[0].pose.p[0])
want_t = V0 / (MU * GRAVITY)
want_d = V0**2 / (2.0 * MU * GRAVITY)
print()
print(f"stopping time      {t_stop:.4f} s   (v0 / (mu g)      = {want_t:.4f} s)")
print(f"stopping distance  {distance:.4f} m   (v0^2 / (2 mu g) = {want_d:.4f} m)")
print(f"deviation          {abs(t_stop - want_t) / want_t:.2%} time, "
      f"{abs(distance - want_d) / want_d:.2%} distance")
