import * as THREE from "three";

import { SceneModel } from "./scene-model";
import { CameraPose } from "./state";

const POSITIVE = new THREE.Color("#1f5fd0"); // dense, well-connected
const NEGATIVE = new THREE.Color("#d03a2a"); // critical bridges
const NEUTRAL = new THREE.Color("#999999");
const WHITE = new THREE.Color("#ffffff");

/** three.js adapter: owns the renderer and rebuilds scene objects from a
 * SceneModel. All numbers here are geometry; readouts live in the DOM. */
export class ManifoldScene {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private surface: THREE.Mesh | null = null;
  private edgeLines: THREE.LineSegments | null = null;
  private markerGroup = new THREE.Group();
  private polyline: THREE.Line | null = null;
  private basePlane: THREE.Mesh | null = null;
  private markerMeshes = new Map<string, THREE.Mesh>();
  private raycaster = new THREE.Raycaster();

  constructor(private canvas: HTMLCanvasElement, private mapTextureUrl?: string) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    this.camera = new THREE.PerspectiveCamera(45, 1, 0.01, 100);
    this.scene.background = new THREE.Color("#10131a");
    const ambient = new THREE.AmbientLight(0xffffff, 0.55);
    const sun = new THREE.DirectionalLight(0xffffff, 1.1);
    sun.position.set(1.5, -1.0, 2.5);
    this.scene.add(ambient, sun, this.markerGroup);
    this.resize();
    window.addEventListener("resize", () => this.resize());
  }

  resize() {
    const width = this.canvas.clientWidth || this.canvas.width;
    const height = this.canvas.clientHeight || this.canvas.height;
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / Math.max(1, height);
    this.camera.updateProjectionMatrix();
  }

  applyCamera(pose: CameraPose) {
    const az = (pose.azimuthDeg * Math.PI) / 180;
    const el = (pose.elevationDeg * Math.PI) / 180;
    const [tx, ty, tz] = pose.target;
    this.camera.position.set(
      tx + pose.distance * Math.cos(el) * Math.sin(az),
      ty - pose.distance * Math.cos(el) * Math.cos(az),
      tz + pose.distance * Math.sin(el),
    );
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(tx, ty, tz);
  }

  private dispose(object: THREE.Object3D | null) {
    if (!object) return;
    this.scene.remove(object);
    object.traverse((child) => {
      const mesh = child as THREE.Mesh;
      if (mesh.geometry) mesh.geometry.dispose();
      const material = mesh.material as THREE.Material | THREE.Material[] | undefined;
      if (Array.isArray(material)) material.forEach((m) => m.dispose());
      else if (material) material.dispose();
    });
  }

  /** Rebuild all drawables from the model. */
  update(model: SceneModel) {
    this.dispose(this.surface);
    this.dispose(this.edgeLines);
    this.dispose(this.polyline);
    this.dispose(this.basePlane);
    this.markerGroup.clear();
    this.markerMeshes.clear();

    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(model.surface.positions, 3));
    geometry.setIndex(new THREE.BufferAttribute(model.surface.indices, 1));
    geometry.computeVertexNormals();
    const material = new THREE.MeshStandardMaterial({
      color: "#c9cfb8",
      roughness: 0.85,
      metalness: 0.0,
      side: THREE.DoubleSide,
      transparent: true,
      opacity: 0.96,
    });
    this.surface = new THREE.Mesh(geometry, material);
    this.scene.add(this.surface);

    // Base plane with the map underlay just under the surface.
    const [[x0, y0], [x1, y1]] = model.basePlane.bounds;
    const plane = new THREE.PlaneGeometry(x1 - x0, y1 - y0);
    plane.translate((x0 + x1) / 2, (y0 + y1) / 2, -0.002);
    const planeMaterial = new THREE.MeshBasicMaterial({ color: "#1c2733" });
    if (this.mapTextureUrl) {
      const texture = new THREE.TextureLoader().load(this.mapTextureUrl);
      texture.colorSpace = THREE.SRGBColorSpace;
      planeMaterial.map = texture;
      planeMaterial.color = WHITE;
    }
    this.basePlane = new THREE.Mesh(plane, planeMaterial);
    this.scene.add(this.basePlane);

    // Graph edges colored by curvature sign, saturation by magnitude.
    const edgePositions = new Float32Array(model.edges.length * 6);
    const edgeColors = new Float32Array(model.edges.length * 6);
    model.edges.forEach((edge, i) => {
      edgePositions.set([...edge.a, ...edge.b], 6 * i);
      const base =
        edge.colorClass === "positive" ? POSITIVE : edge.colorClass === "negative" ? NEGATIVE : NEUTRAL;
      const color = base.clone().lerp(WHITE, 1 - (0.35 + 0.65 * edge.magnitude));
      edgeColors.set([color.r, color.g, color.b, color.r, color.g, color.b], 6 * i);
    });
    const edgeGeometry = new THREE.BufferGeometry();
    edgeGeometry.setAttribute("position", new THREE.BufferAttribute(edgePositions, 3));
    edgeGeometry.setAttribute("color", new THREE.BufferAttribute(edgeColors, 3));
    this.edgeLines = new THREE.LineSegments(
      edgeGeometry,
      new THREE.LineBasicMaterial({ vertexColors: true, linewidth: 2 }),
    );
    this.scene.add(this.edgeLines);

    for (const marker of model.markers) {
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(0.008, 12, 12),
        new THREE.MeshStandardMaterial({
          color: marker.selected ? "#ffd43b" : "#eeeeee",
          emissive: marker.selected ? "#6b5200" : "#000000",
        }),
      );
      mesh.position.set(...marker.position);
      mesh.userData.vertexId = marker.id;
      mesh.userData.vertexName = marker.name;
      this.markerGroup.add(mesh);
      this.markerMeshes.set(marker.id, mesh);
    }

    if (model.geodesicPolyline) {
      const lineGeometry = new THREE.BufferGeometry();
      lineGeometry.setAttribute(
        "position",
        new THREE.BufferAttribute(model.geodesicPolyline, 3),
      );
      this.polyline = new THREE.Line(
        lineGeometry,
        new THREE.LineBasicMaterial({ color: "#111111", linewidth: 3 }),
      );
      this.polyline.position.z += 0.001; // sit just above the surface
      this.scene.add(this.polyline);
    }
  }

  /** Vertex id under the pointer, if any. */
  pick(clientX: number, clientY: number): string | null {
    const rect = this.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((clientX - rect.left) / rect.width) * 2 - 1,
      -((clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    this.raycaster.params.Points = { threshold: 0.02 };
    const hits = this.raycaster.intersectObjects(this.markerGroup.children);
    return hits.length ? (hits[0].object.userData.vertexId as string) : null;
  }

  render() {
    this.renderer.render(this.scene, this.camera);
  }
}
