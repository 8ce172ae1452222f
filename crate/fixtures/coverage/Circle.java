public final class Circle extends AbstractShape {
    private Renderer renderer;
    private static Circle cached;
    private static boolean created;

    private Circle() {
        renderer = new Renderer();
    }

    public static Circle instance() {
        if (!created) {
            cached = new Circle();
            created = true;
        }
        return cached;
    }

    public void draw() {
        renderer.paint();
        helperA();
        helperB();
    }

    public void resize(int factor) { }

    private void helperA() { }

    private void helperB() { }
}
