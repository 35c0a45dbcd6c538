/** Map interaction tools (obstacle placement by clicking vertices). */

export interface ObstacleToolResult {
  done: boolean;
  polygon?: number[][];
}

export class ObstacleTool {
  vertices: number[][] = [];
  private readonly closeRadius: number;

  constructor(closeRadius = 1.5) {
    this.closeRadius = closeRadius;
  }

  /** Add a click in world coordinates; near the first vertex closes it. */
  click(x: number, y: number): ObstacleToolResult {
    if (this.vertices.length >= 3) {
      const [fx, fy] = this.vertices[0];
      if (Math.hypot(x - fx, y - fy) <= this.closeRadius) {
        const polygon = this.vertices;
        this.vertices = [];
        return { done: true, polygon };
      }
    }
    this.vertices.push([x, y]);
    return { done: false };
  }

  cancel(): void {
    this.vertices = [];
  }
}
