// Pointer-drag to force mapping. A drag vector in screen pixels maps
// linearly to a force, clamped to a maximum magnitude; letting go always
// emits one final zero-force message, so the machine is never left pushed
// by a stale command.

export interface ForceCommand {
  fx: number;
  fy: number;
}

export interface DragOptions {
  pixelsPerForceUnit: number;
  maxForce: number;
  minSendInterval: number; // ms between force messages while dragging
}

export const DEFAULT_DRAG: DragOptions = {
  pixelsPerForceUnit: 60,
  maxForce: 5,
  minSendInterval: 10,
};

export class DragController {
  private dragging = false;
  private originX = 0;
  private originY = 0;
  private lastSent = -Infinity;
  current: ForceCommand = { fx: 0, fy: 0 };

  constructor(
    private readonly emit: (cmd: ForceCommand) => void,
    private readonly opts: DragOptions = DEFAULT_DRAG,
    private readonly now: () => number = () => Date.now(),
  ) {}

  pointerDown(x: number, y: number): void {
    this.dragging = true;
    this.originX = x;
    this.originY = y;
  }

  pointerMove(x: number, y: number): void {
    if (!this.dragging) return;
    const cmd = this.toForce(x, y);
    this.current = cmd;
    const t = this.now();
    if (t - this.lastSent >= this.opts.minSendInterval) {
      this.lastSent = t;
      this.emit(cmd);
    }
  }

  pointerUp(): void {
    if (!this.dragging) return;
    this.dragging = false;
    this.current = { fx: 0, fy: 0 };
    this.emit({ fx: 0, fy: 0 }); // release is always a zero-force message
  }

  isDragging(): boolean {
    return this.dragging;
  }

  private toForce(x: number, y: number): ForceCommand {
    // Screen y grows downward; world y grows upward.
    let fx = (x - this.originX) / this.opts.pixelsPerForceUnit;
    let fy = -(y - this.originY) / this.opts.pixelsPerForceUnit;
    const mag = Math.hypot(fx, fy);
    if (mag > this.opts.maxForce) {
      fx *= this.opts.maxForce / mag;
      fy *= this.opts.maxForce / mag;
    }
    return { fx, fy };
  }
}
