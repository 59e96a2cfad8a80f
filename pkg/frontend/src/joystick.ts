// Stick handling. The mapping is pure and the sender is pumped with an
// explicit clock, so both are testable without real timers.

export const SEND_INTERVAL_MS = 100; // 10 Hz manual stream

export interface DriveLimits {
  max_speed: number;
  max_turn_rate: number;
}

export interface DriveCommand {
  linear: number;
  angular: number;
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/**
 * Map a stick position to a drive command. x is right-positive and
 * y is forward-positive, both in [-1, 1]. Pushing right turns clockwise,
 * which is a negative angular rate in the rover's frame.
 */
export function stickToCommand(
  x: number,
  y: number,
  limits: DriveLimits,
): DriveCommand {
  return {
    linear: clamp(y, -1, 1) * limits.max_speed,
    angular: -clamp(x, -1, 1) * limits.max_turn_rate,
  };
}

export interface JoystickHooks {
  send: (linear: number, angular: number, spray: boolean) => void;
  canDrive: () => boolean;
  limits: () => DriveLimits | null;
}

/**
 * Streams manual commands at a fixed rate while the stick is engaged and
 * sends a single stop command on release. Outside manual mode (or while
 * disconnected) nothing is sent at all; the rover's own dead man covers
 * the case where we vanish mid-drive.
 */
export class JoystickSender {
  private x = 0;
  private y = 0;
  private spray = false;
  private engaged = false;
  private stopSent = true; // nothing to stop before the first engage
  private lastSentMs = -Infinity;

  constructor(private hooks: JoystickHooks) {}

  engage(x: number, y: number, spray = false): void {
    this.engaged = true;
    this.move(x, y);
    this.spray = spray;
  }

  move(x: number, y: number): void {
    this.x = clamp(x, -1, 1);
    this.y = clamp(y, -1, 1);
  }

  setSpray(on: boolean): void {
    this.spray = on;
  }

  release(): void {
    this.engaged = false;
    this.spray = false;
  }

  isEngaged(): boolean {
    return this.engaged;
  }

  /** Call often; actual sends are rate limited internally. */
  pump(nowMs: number): void {
    if (!this.hooks.canDrive()) {
      return;
    }
    if (nowMs - this.lastSentMs < SEND_INTERVAL_MS) {
      return;
    }
    const limits = this.hooks.limits() ?? { max_speed: 1, max_turn_rate: 1 };
    if (this.engaged) {
      const cmd = stickToCommand(this.x, this.y, limits);
      this.hooks.send(cmd.linear, cmd.angular, this.spray);
      this.stopSent = false;
      this.lastSentMs = nowMs;
    } else if (!this.stopSent) {
      this.hooks.send(0, 0, false);
      this.stopSent = true;
      this.lastSentMs = nowMs;
    }
  }
}
